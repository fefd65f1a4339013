#include "edit_suggest/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "edit_suggest/rng.hpp"

namespace edit_suggest {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double xlog2(double p, double q) { return p > 0.0 ? p * std::log2(p / q) : 0.0; }

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void provenance_lines(std::ostringstream& out, const Provenance& p)
{
    out << "# checkpoint=" << p.checkpoint_id << '\n'
        << "# dataset=" << p.dataset_id << '\n'
        << "# seed=" << p.seed << '\n'
        << "# config_hash=" << p.config_hash << '\n';
}

struct BranchAndBound {
    const std::vector<std::vector<double>>& cost;
    std::size_t proposals;
    std::vector<std::size_t> current;
    std::vector<bool> used;
    std::vector<std::size_t> best;
    double best_cost = std::numeric_limits<double>::infinity();

    void search(std::size_t i, double partial)
    {
        if (partial >= best_cost) {
            return;
        }
        if (i == cost.size()) {
            best_cost = partial;
            best = current;
            return;
        }
        for (std::size_t j = 0; j < proposals; ++j) {
            if (used[j]) {
                continue;
            }
            used[j] = true;
            current[i] = j;
            search(i + 1, partial + cost[i][j]);
            used[j] = false;
        }
    }
};

}  // namespace

void HistogramSpec::validate() const
{
    if (bins < 2) {
        throw ConfigError("histogram needs at least 2 bins");
    }
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw ConfigError("histogram range must satisfy lo < hi");
    }
}

double HistogramSpec::bin_left(std::size_t b) const
{
    return lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
}

double HistogramSpec::bin_right(std::size_t b) const { return bin_left(b + 1); }

std::vector<double> histogram(std::span<const double> values, const HistogramSpec& spec)
{
    spec.validate();
    std::vector<double> counts(spec.bins, 0.0);
    double total = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError("histogram: non-finite value");
        }
        if (!spec.clamp && (v < spec.lo || v > spec.hi)) {
            continue;
        }
        const double t = (v - spec.lo) / (spec.hi - spec.lo) * static_cast<double>(spec.bins);
        const auto b = static_cast<std::size_t>(
            std::clamp(std::floor(t), 0.0, static_cast<double>(spec.bins - 1)));
        counts[b] += 1.0;
        total += 1.0;
    }
    if (total == 0.0) {
        throw ConfigError("histogram: no values in range");
    }
    for (auto& c : counts) {
        c /= total;
    }
    return counts;
}

double jsd_bits(std::span<const double> p, std::span<const double> q)
{
    if (p.size() != q.size() || p.empty()) {
        throw ShapeError("jsd: probability vectors must be nonempty and equal length");
    }
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        js += 0.5 * xlog2(p[i], m) + 0.5 * xlog2(q[i], m);
    }
    return std::max(js, 0.0);
}

Samples model_samples(const CgmVaeModel& model, std::span<const ImageEditRecord> records,
                      std::size_t draws, std::uint64_t seed)
{
    Samples out;
    for (const auto& r : records) {
        auto p = propose_edits(r.x, draws, model, combine_seed(seed, r.content_hash()));
        std::move(p.begin(), p.end(), std::back_inserter(out));
    }
    return out;
}

Samples model_samples(const GaussianMlpModel& model, std::span<const ImageEditRecord> records,
                      std::size_t draws, std::uint64_t seed)
{
    Samples out;
    for (const auto& r : records) {
        const auto key = combine_seed(seed, r.content_hash());
        for (std::size_t i = 0; i < draws; ++i) {
            out.push_back(gaussian_mlp_sample(r.x, model, derive_seed(key, "draw", i)));
        }
    }
    return out;
}

Samples model_samples(const MdnModel& model, std::span<const ImageEditRecord> records,
                      std::size_t draws, std::uint64_t seed)
{
    Samples out;
    for (const auto& r : records) {
        const auto key = combine_seed(seed, r.content_hash());
        for (std::size_t i = 0; i < draws; ++i) {
            out.push_back(mdn_sample(r.x, model, derive_seed(key, "draw", i)));
        }
    }
    return out;
}

Samples model_samples(const CgmSvaeModel& model, std::span<const ImageEditRecord> records,
                      std::size_t draws, std::uint64_t seed)
{
    const auto prior = model.prior.to_gmm().weights;
    Samples out;
    for (const auto& r : records) {
        auto p = propose_personalized(r.x, draws, prior, model, combine_seed(seed, r.content_hash()));
        std::move(p.begin(), p.end(), std::back_inserter(out));
    }
    return out;
}

Samples true_samples(std::span<const ImageEditRecord> records)
{
    Samples out;
    for (const auto& r : records) {
        out.push_back(r.y);
    }
    return out;
}

std::vector<double> slider_column(const Samples& samples, std::size_t d)
{
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back(s.at(d));
    }
    return out;
}

JsdResult jsd_per_slider(const Samples& a, const Samples& b, const HistogramSpec& spec)
{
    if (a.empty() || b.empty()) {
        throw ConfigError("jsd_per_slider: empty sample set");
    }
    const auto dim = a.front().size();
    for (const auto* set : {&a, &b}) {
        for (const auto& s : *set) {
            if (s.size() != dim) {
                throw ShapeError("jsd_per_slider: inconsistent slider dimension");
            }
        }
    }
    JsdResult out;
    for (std::size_t d = 0; d < dim; ++d) {
        const auto ha = histogram(slider_column(a, d), spec);
        const auto hb = histogram(slider_column(b, d), spec);
        out.per_slider.push_back(jsd_bits(ha, hb));
    }
    out.mean = std::accumulate(out.per_slider.begin(), out.per_slider.end(), 0.0) /
               static_cast<double>(dim);
    return out;
}

std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost)
{
    const auto n = cost.size();
    if (n == 0) {
        return {};
    }
    const auto m = cost.front().size();
    if (n > m) {
        throw ConfigError("hungarian: more rows than columns");
    }
    const double inf = std::numeric_limits<double>::infinity();
    // Potentials formulation with 1-based indices; column 0 is a sentinel.
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const auto i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const auto j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            assignment[p[j] - 1] = j - 1;
        }
    }
    return assignment;
}

Alignment align_proposals(const Samples& proposals, const Samples& references)
{
    const auto K = proposals.size();
    const auto E = references.size();
    if (E == 0) {
        throw ConfigError("align_proposals: no references");
    }
    if (K < E) {
        throw ConfigError("align_proposals: " + std::to_string(K) + " proposals for " +
                          std::to_string(E) + " references (need K >= E)");
    }
    const auto dim = references.front().size();
    for (const auto* set : {&proposals, &references}) {
        for (const auto& s : *set) {
            if (s.size() != dim) {
                throw ShapeError("align_proposals: inconsistent slider dimension");
            }
        }
    }
    std::vector<std::vector<double>> cost(E, std::vector<double>(K));
    for (std::size_t i = 0; i < E; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
            cost[i][j] = squared_distance(references[i], proposals[j]);
        }
    }

    Alignment out;
    if (E <= 5 && K <= 20) {
        BranchAndBound bb{cost, K, std::vector<std::size_t>(E), std::vector<bool>(K, false), {}};
        bb.search(0, 0.0);
        out.assignment = bb.best;
    } else {
        out.assignment = hungarian(cost);
    }
    for (std::size_t i = 0; i < E; ++i) {
        out.total_sq_error += cost[i][out.assignment[i]];
    }
    out.mse = out.total_sq_error / static_cast<double>(E * dim);
    return out;
}

MetricValue summarize(std::span<const double> values)
{
    if (values.empty()) {
        throw ConfigError("summarize: no values");
    }
    const auto n = static_cast<double>(values.size());
    // Shifted by the first value so identical inputs give exactly zero spread.
    const double shift = values.front();
    double sum = 0.0;
    for (double v : values) {
        sum += v - shift;
    }
    const double offset = sum / n;
    double ss = 0.0;
    for (double v : values) {
        const double d = (v - shift) - offset;
        ss += d * d;
    }
    const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    return {shift + offset, se, values.size()};
}

std::string EvalReport::to_json() const
{
    nlohmann::ordered_json j;
    auto& m = j["metrics"];
    m = nlohmann::ordered_json::object();
    for (const auto& [name, v] : metrics) {
        m[name] = {{"value", v.value}, {"std_error", v.std_error}, {"count", v.count}};
    }
    if (!series.empty()) {
        for (const auto& [name, values] : series) {
            j["series"][name] = values;
        }
    }
    j["provenance"] = {{"checkpoint", provenance.checkpoint_id},
                       {"dataset", provenance.dataset_id},
                       {"seed", provenance.seed},
                       {"config_hash", provenance.config_hash}};
    return j.dump(2) + "\n";
}

RecordScorer scorer(const CgmVaeModel& model, std::size_t samples, std::uint64_t seed)
{
    return [&model, samples, seed](const ImageEditRecord& r) {
        return predictive_loglik(r.x, r.y, model, samples, combine_seed(seed, r.content_hash())).value;
    };
}

RecordScorer scorer(const CgmSvaeModel& model, std::size_t samples, std::uint64_t seed)
{
    return [&model, samples, seed](const ImageEditRecord& r) {
        return personalized_predictive_ll(UserRecordSet{r.user_id, {r}}, 0, 1, model, samples, seed);
    };
}

RecordScorer scorer(const GaussianMlpModel& model)
{
    return [&model](const ImageEditRecord& r) { return gaussian_mlp_loglik(r.x, r.y, model); };
}

RecordScorer scorer(const MdnModel& model)
{
    return [&model](const ImageEditRecord& r) { return mdn_loglik(r.x, r.y, model); };
}

std::vector<double> score_records(std::span<const ImageEditRecord> records, const RecordScorer& s)
{
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(s(r));
    }
    return out;
}

EvalReport ll_report(const RecordScorer& score, std::span<const ImageEditRecord> testset,
                     const Provenance& provenance)
{
    if (testset.empty()) {
        throw ConfigError("ll_report: empty test set");
    }
    EvalReport report;
    report.metrics["ll"] = summarize(score_records(testset, score));
    report.provenance = provenance;
    return report;
}

PersonalizationCurve personalization_curve(const CgmSvaeModel& model,
                                           std::span<const UserRecordSet> users,
                                           std::span<const std::size_t> grid, std::size_t n_eval,
                                           std::size_t samples, std::uint64_t seed)
{
    if (grid.empty()) {
        throw ConfigError("personalization_curve: empty grid");
    }
    if (n_eval < 1) {
        throw ConfigError("personalization_curve: n_eval must be >= 1");
    }
    PersonalizationCurve curve;
    curve.grid.assign(grid.begin(), grid.end());
    const auto max_n = *std::max_element(grid.begin(), grid.end());

    std::vector<const UserRecordSet*> ordered;
    for (const auto& u : users) {
        ordered.push_back(&u);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto* a, const auto* b) { return a->user_id < b->user_id; });

    for (const auto* u : ordered) {
        if (u->size() < max_n + n_eval) {
            ++curve.skipped_users;
            continue;
        }
        // Component likelihoods of the evaluation records do not depend on n_cond.
        std::vector<std::vector<double>> comps;
        for (std::size_t n = u->size() - n_eval; n < u->size(); ++n) {
            comps.push_back(component_loglik(u->records[n], model, samples, seed));
        }
        auto ll_at = [&](std::size_t n_cond) {
            UserRecordSet cond{u->user_id, {u->records.begin(),
                                            u->records.begin() + static_cast<std::ptrdiff_t>(n_cond)}};
            const auto q = user_posterior(cond, model);
            double total = 0.0;
            for (const auto& c : comps) {
                std::vector<double> joint(c.size());
                for (std::size_t k = 0; k < c.size(); ++k) {
                    joint[k] = std::log(q.probs[k]) + c[k];
                }
                const double m = *std::max_element(joint.begin(), joint.end());
                double s = 0.0;
                for (double v : joint) {
                    s += std::exp(v - m);
                }
                total += m + std::log(s);
            }
            return total / static_cast<double>(comps.size());
        };
        const double base = ll_at(0);
        UserTrajectory t{u->user_id, {}};
        for (auto n : grid) {
            t.values.push_back(n == 0 ? 0.0 : ll_at(n) - base);
        }
        curve.trajectories.push_back(std::move(t));
    }
    if (curve.trajectories.empty()) {
        throw ConfigError("personalization_curve: no user has " + std::to_string(max_n + n_eval) +
                          " records");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> column;
        for (const auto& t : curve.trajectories) {
            column.push_back(t.values[i]);
        }
        const auto s = summarize(column);
        curve.mean.push_back(s.value);
        curve.std_error.push_back(s.std_error);
    }
    return curve;
}

std::string curve_csv(const PersonalizationCurve& curve, const Provenance& provenance)
{
    std::ostringstream out;
    provenance_lines(out, provenance);
    out << "# users=" << curve.trajectories.size() << " skipped=" << curve.skipped_users << '\n';
    out << "n_cond,mean,stderr\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out << curve.grid[i] << ',' << fmt(curve.mean[i]) << ',' << fmt(curve.std_error[i]) << '\n';
    }
    return out.str();
}

std::string trajectories_csv(const PersonalizationCurve& curve, const Provenance& provenance)
{
    std::ostringstream out;
    provenance_lines(out, provenance);
    out << "user_id";
    for (auto n : curve.grid) {
        out << ",n_" << n;
    }
    out << '\n';
    for (const auto& t : curve.trajectories) {
        out << t.user_id;
        for (double v : t.values) {
            out << ',' << fmt(v);
        }
        out << '\n';
    }
    return out.str();
}

std::string histogram_csv(std::span<const double> truth, std::span<const double> model,
                          const HistogramSpec& spec, const Provenance& provenance)
{
    const auto ht = histogram(truth, spec);
    const auto hm = histogram(model, spec);
    std::ostringstream out;
    provenance_lines(out, provenance);
    out << "bin_left,bin_right,p_true,p_model\n";
    for (std::size_t b = 0; b < spec.bins; ++b) {
        out << fmt(spec.bin_left(b)) << ',' << fmt(spec.bin_right(b)) << ',' << fmt(ht[b]) << ','
            << fmt(hm[b]) << '\n';
    }
    return out.str();
}

}  // namespace edit_suggest
