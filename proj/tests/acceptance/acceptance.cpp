// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "edit_suggest/baselines.hpp"
#include "edit_suggest/cgm_svae.hpp"
#include "edit_suggest/cgm_vae.hpp"
#include "edit_suggest/checkpoint.hpp"
#include "edit_suggest/cli.hpp"
#include "edit_suggest/dists.hpp"
#include "edit_suggest/evalkit.hpp"
#include "edit_suggest/optim.hpp"
#include "edit_suggest/rng.hpp"
#include "edit_suggest/split.hpp"
#include "edit_suggest/synthdata.hpp"
#include "linear_gaussian.hpp"
#include "model_oracle.hpp"
#include "tiny_model.hpp"

using namespace edit_suggest;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int digits = 4)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

fs::path artifact_dir()
{
    const auto dir = default_output_dir() / "acceptance_artifacts";
    fs::create_directories(dir);
    return dir;
}

// Criterion 1 ------------------------------------------------------------

std::vector<ImageEditRecord> random_records(Rng& rng, std::size_t n, std::size_t dx, std::size_t dy)
{
    std::vector<ImageEditRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        ImageEditRecord r;
        r.user_id = 1;
        for (std::size_t d = 0; d < dx; ++d) r.x.push_back(rng.normal());
        for (std::size_t d = 0; d < dy; ++d) r.y.push_back(0.5 * rng.normal());
        out.push_back(r);
    }
    return out;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi)
{
    return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

std::vector<std::size_t> random_hidden(Rng& rng)
{
    std::vector<std::size_t> h(pick(rng, 0, 2));
    for (auto& w : h) w = pick(rng, 2, 6);
    return h;
}

// Zero-initialized biases and potentials would leave some paths untested.
void jitter(std::vector<NamedTensor> params, Rng& rng)
{
    for (auto& p : params) {
        for (auto& v : p.tensor->storage()) v += 0.2 * rng.normal();
    }
}

std::vector<Tensor*> tensors_of(MlpParams& net)
{
    std::vector<NamedTensor> named;
    net.append_parameters("net", named);
    std::vector<Tensor*> out;
    for (auto& n : named) out.push_back(n.tensor);
    return out;
}

Outcome gradient_correctness()
{
    double worst = 0.0;
    std::string worst_net;
    auto record = [&](double err, const char* net) {
        if (err > worst) {
            worst = err;
            worst_net = net;
        }
    };
    for (std::uint64_t inst = 0; inst < 20; ++inst) {
        Rng rng(derive_seed(2024, "grad-instance", inst));
        ModelConfig mc;
        mc.x_dim = pick(rng, 1, 4);
        mc.y_dim = pick(rng, 1, 3);
        mc.latent_dim = pick(rng, 1, 3);
        mc.components = pick(rng, 1, 4);
        mc.hidden = random_hidden(rng);
        const auto records = random_records(rng, pick(rng, 1, 3), mc.x_dim, mc.y_dim);
        const auto batch = make_batch(std::span<const ImageEditRecord>(records));
        const NoiseSource noise(derive_seed(inst, "noise"));

        auto vae = CgmVaeModel::init(mc, inst);
        jitter(vae.named_parameters(), rng);
        auto vae_obj = [&](ad::Graph& g) { return ad::mean(elbo_graph(g, vae, batch, noise)); };
        record(grad_check(vae_obj, tensors_of(vae.decoder)), "decoder");
        record(grad_check(vae_obj, tensors_of(vae.recog_s)), "recog_s");
        record(grad_check(vae_obj, tensors_of(vae.recog_z)), "recog_z");

        auto svae = CgmSvaeModel::init(mc, inst + 100);
        jitter(svae.named_parameters(), rng);
        const UserRecordSet user{1, records};
        auto svae_obj = [&](ad::Graph& g) { return elbo_user_graph(g, svae, user, noise); };
        record(grad_check(svae_obj, tensors_of(svae.recog_r)), "recog_r");

        auto mdn = MdnModel::init(BaselineConfig{mc.x_dim, mc.y_dim, mc.hidden}, pick(rng, 1, 4), inst + 200);
        jitter(mdn.named_parameters(), rng);
        auto mdn_obj = [&](ad::Graph& g) { return ad::mean(mdn_loglik_graph(g, mdn, batch)); };
        record(grad_check(mdn_obj, tensors_of(mdn.net)), "mdn");
    }
    return {worst <= 1e-5, "max rel err " + num(worst, 3) + " (" + worst_net + ") over 5 x 20 instances"};
}

// Criterion 2 ------------------------------------------------------------

Outcome elbo_consistency()
{
    const auto& m = fixture::trained_tiny_model();
    const auto records = fixture::bimodal_records(100, 2024);
    std::size_t below = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto is = predictive_loglik(r.x, r.y, m, 10000, derive_seed(7, "is", i));
        std::vector<double> draws;
        const std::vector<ImageEditRecord> one{r};
        for (std::size_t d = 0; d < 1000; ++d) {
            draws.push_back(elbo(one, m, NoiseSource(derive_seed(r.content_hash(), "elbo-draw", d))));
        }
        const auto lb = oracle::mean_and_se(draws);
        if (lb.mean <= is.value + 3.0 * std::hypot(is.std_error, lb.se)) ++below;
    }
    const auto pr = oracle::prior(m.prior);
    double worst = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        const auto& r = records[i];
        std::vector<double> per_k;
        for (std::size_t k = 0; k < pr.comps.size(); ++k) {
            per_k.push_back(pr.log_weights[k] +
                            oracle::component_ll_quadrature(m.decoder, pr.comps[k], r.x, r.y));
        }
        const double exact = oracle::logsumexp(per_k);
        worst = std::max(worst, std::abs(predictive_loglik(r.x, r.y, m, 10000, derive_seed(7, "is", i)).value - exact));
    }
    return {below >= 99 && worst <= 0.01, "elbo <= IS + 3SE on " + std::to_string(below) +
                                              "/100 records; max |IS - quadrature| " + num(worst, 3) + " on 20"};
}

// Criterion 3 ------------------------------------------------------------

Outcome posterior_exactness()
{
    const oracle::LinearGaussian lg;
    const auto model = lg.model();
    double worst = 0.0, worst_perm = 0.0, empty_err = 0.0;
    for (std::size_t u = 0; u < 50; ++u) {
        const auto n = u % 13;
        auto user = lg.sample_user(static_cast<std::int64_t>(u), u % lg.L(), n, derive_seed(33, "user", u));
        const auto q = user_posterior(user, model).probs;
        const auto truth = lg.brute_force_posterior(user);
        for (std::size_t k = 0; k < q.size(); ++k) {
            worst = std::max(worst, std::abs(q[k] - truth[k]));
            if (n == 0) empty_err = std::max(empty_err, std::abs(q[k] - lg.pi[k]));
        }
        auto shuffled = user;
        Rng(derive_seed(33, "perm", u)).shuffle(shuffled.records.begin(), shuffled.records.end());
        const auto qp = user_posterior(shuffled, model).probs;
        for (std::size_t k = 0; k < q.size(); ++k) worst_perm = std::max(worst_perm, std::abs(q[k] - qp[k]));
    }
    return {worst <= 1e-10 && worst_perm <= 1e-12 && empty_err <= 1e-15,
            "max |q - brute force| " + num(worst, 3) + ", permutation " + num(worst_perm, 3) + ", N_u=0 vs pi " +
                num(empty_err, 3) + " over 50 users"};
}

// Criteria 4 and 5 -------------------------------------------------------

struct ExpertRun {
    double jsd_vae = 0, jsd_mlp = 0;
    MetricValue ll_vae, ll_mlp, ll_mdn1, ll_mdn3;
    double ll_oracle = 0;
};

const ExpertRun& expert_run()
{
    static const ExpertRun run = [] {
        const std::uint64_t seed = 7;
        const auto gen = preset_config("expert", seed);
        const auto records = flatten(generate(gen));
        const auto split = split_records(records, {}, seed);
        TrainConfig cfg;
        cfg.epochs = 100;
        cfg.seed = seed;
        const auto vae = train_cgm_vae(split.train, split.val, cfg).model;
        const auto mlp = train_gaussian_mlp(split.train, split.val, cfg).model;
        cfg.components = 1;
        const auto mdn1 = train_mdn(split.train, split.val, cfg).model;
        cfg.components = 3;
        const auto mdn3 = train_mdn(split.train, split.val, cfg).model;

        ExpertRun r;
        const auto truth = true_samples(split.test);
        r.jsd_vae = jsd_per_slider(truth, model_samples(vae, split.test, 10, seed)).mean;
        r.jsd_mlp = jsd_per_slider(truth, model_samples(mlp, split.test, 10, seed)).mean;
        r.ll_vae = summarize(score_records(split.test, scorer(vae, 1000, seed)));
        r.ll_mlp = summarize(score_records(split.test, scorer(mlp)));
        r.ll_mdn1 = summarize(score_records(split.test, scorer(mdn1)));
        r.ll_mdn3 = summarize(score_records(split.test, scorer(mdn3)));
        std::vector<double> oracle_ll;
        for (const auto& rec : split.test) oracle_ll.push_back(oracle_loglik(rec, gen));
        r.ll_oracle = summarize(oracle_ll).value;

        std::ofstream(artifact_dir() / "expert_jsd.txt")
            << "cgm-vae " << r.jsd_vae << "\nmlp " << r.jsd_mlp << '\n';
        return r;
    }();
    return run;
}

Outcome multimodality()
{
    const auto& r = expert_run();
    return {r.jsd_vae <= 0.05 && r.jsd_mlp >= 2.0 * r.jsd_vae,
            "JSD cgm-vae " + num(r.jsd_vae) + " bits, mlp " + num(r.jsd_mlp) + " (ratio " +
                num(r.jsd_mlp / r.jsd_vae, 3) + ")"};
}

Outcome ll_ordering()
{
    const auto& r = expert_run();
    auto gap = [&](const MetricValue& other) {
        return (r.ll_vae.value - other.value) / std::hypot(r.ll_vae.std_error, other.std_error);
    };
    const double g_mlp = gap(r.ll_mlp), g_mdn = gap(r.ll_mdn1);
    bool bounded = true;
    for (const auto* m : {&r.ll_vae, &r.ll_mlp, &r.ll_mdn1, &r.ll_mdn3}) bounded = bounded && m->value <= r.ll_oracle;
    return {g_mlp >= 3.0 && g_mdn >= 3.0 && bounded,
            "LL cgm-vae " + num(r.ll_vae.value) + " +- " + num(r.ll_vae.std_error, 2) + ", mdn(M=1) " +
                num(r.ll_mdn1.value) + " (" + num(g_mdn, 3) + " SE), mlp " + num(r.ll_mlp.value) + " (" +
                num(g_mlp, 3) + " SE), mdn(M=3) " + num(r.ll_mdn3.value) + ", oracle " + num(r.ll_oracle)};
}

// Criterion 6 ------------------------------------------------------------

std::vector<UserRecordSet> style_group_users(std::uint64_t seed)
{
    auto c = preset_config("casual", seed);
    c.users_per_group = 40;
    c.images_per_user = 30;
    for (auto& m : c.mode_offsets) m.resize(1);
    for (auto& w : c.mode_weights) w = {1.0};
    return generate(c);
}

double purity(const std::vector<UserRecordSet>& users, const CgmSvaeModel& model)
{
    const auto L = model.config.components;
    std::vector<std::vector<std::size_t>> table(L, std::vector<std::size_t>(3, 0));
    for (const auto& u : users) ++table[map_user_category(u, model)][static_cast<std::size_t>(*u.records.front().group)];
    std::size_t pure = 0;
    for (const auto& row : table) pure += *std::max_element(row.begin(), row.end());
    return static_cast<double>(pure) / static_cast<double>(users.size());
}

Outcome user_clustering()
{
    std::string detail = "purity";
    bool ok = true;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto users = style_group_users(seed);
        const auto s = split_per_user(users, {}, seed);
        TrainConfig cfg;
        cfg.epochs = 60;
        cfg.hidden = {32};
        cfg.latent_dim = 2;
        cfg.components = 3;
        cfg.user_batch_size = 8;
        cfg.adam.learning_rate = 5e-3;
        cfg.seed = seed;
        const auto p = purity(users, train_cgm_svae(s.train, s.val, cfg).model);
        ok = ok && p >= 0.9;
        detail += " " + num(p, 3);
    }
    return {ok, detail + " over seeds 1, 2, 3 (120 users in 3 groups)"};
}

// Criterion 7 ------------------------------------------------------------

Outcome personalization_trend()
{
    const std::vector<std::size_t> grid{0, 1, 2, 3, 5, 10, 15, 20, 25, 30};
    const std::size_t at10 = 5;
    std::string detail = "mean/SE at n=10:";
    bool ok = true;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto users = generate(preset_config("frequent", seed));
        std::vector<UserRecordSet> fit, held;
        for (std::size_t i = 0; i < users.size(); ++i) ((i % 40) < 30 ? fit : held).push_back(users[i]);
        const auto s = split_per_user(fit, {0.9, 0.1, 0.0}, seed);
        TrainConfig cfg;
        cfg.epochs = 60;
        cfg.hidden = {32};
        cfg.latent_dim = 2;
        cfg.components = 3;
        cfg.user_batch_size = 8;
        cfg.adam.learning_rate = 5e-3;
        cfg.seed = seed;
        const auto model = train_cgm_svae(s.train, s.val, cfg).model;
        const auto curve = personalization_curve(model, held, grid, 20, 100, seed);
        const Provenance p{"acceptance", "frequent", seed, "-"};
        const auto dir = artifact_dir();
        std::ofstream(dir / ("curve_seed" + std::to_string(seed) + ".csv")) << curve_csv(curve, p);
        std::ofstream(dir / ("trajectories_seed" + std::to_string(seed) + ".csv")) << trajectories_csv(curve, p);
        const double mean = curve.mean[at10], se = curve.std_error[at10];
        ok = ok && curve.trajectories.size() == 30 && mean >= 0.0 && mean > 2.0 * se;
        detail += " " + num(mean, 3) + "/" + num(se, 2);
    }
    return {ok, detail + " (30 held-out users per seed)"};
}

// Criterion 8 ------------------------------------------------------------

double exhaustive(const Samples& props, const Samples& refs)
{
    double best = INFINITY;
    std::vector<std::size_t> cur(refs.size());
    std::vector<bool> used(props.size(), false);
    std::function<void(std::size_t, double)> rec = [&](std::size_t i, double acc) {
        if (i == refs.size()) {
            best = std::min(best, acc);
            return;
        }
        for (std::size_t j = 0; j < props.size(); ++j) {
            if (used[j]) continue;
            double d = 0.0;
            for (std::size_t k = 0; k < refs[i].size(); ++k) d += (refs[i][k] - props[j][k]) * (refs[i][k] - props[j][k]);
            used[j] = true;
            rec(i + 1, acc + d);
            used[j] = false;
        }
    };
    rec(0, 0.0);
    return best;
}

Outcome alignment()
{
    Rng rng(88);
    double worst = 0.0;
    std::size_t monotone_breaks = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t E = 1 + static_cast<std::size_t>(t % 3);
        const std::size_t dim = 1 + static_cast<std::size_t>(t % 4);
        Samples pool(10, std::vector<double>(dim)), refs(E, std::vector<double>(dim));
        for (auto& p : pool) for (auto& v : p) v = rng.normal();
        for (auto& p : refs) for (auto& v : p) v = rng.normal();
        const std::size_t K = pick(rng, E, 10);
        const Samples props(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(K));
        worst = std::max(worst, std::abs(align_proposals(props, refs).total_sq_error - exhaustive(props, refs)));
        double prev = INFINITY;
        for (std::size_t k = E; k <= 10; ++k) {
            const double e = align_proposals(Samples(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k)), refs).mse;
            if (e > prev) ++monotone_breaks;
            prev = e;
        }
    }
    return {worst <= 1e-12 && monotone_breaks == 0,
            "max |aligned - exhaustive| " + num(worst, 3) + " on 200 instances; " +
                std::to_string(monotone_breaks) + " increases over nested K"};
}

// Criterion 9 ------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism()
{
    const auto root = fs::temp_directory_path() / "edit_suggest_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string bin = EDIT_SUGGEST_CLI_PATH;
    std::vector<std::string> mismatches;
    std::size_t compared = 0;
    auto sh = [&](const std::string& args) {
        const auto cmd = bin + " " + args + " > /dev/null 2>> " + (root / "stderr.txt").string();
        if (std::system(cmd.c_str()) != 0) throw std::runtime_error("command failed: edit-suggest " + args);
    };
    auto twice = [&](const std::string& name, const std::function<std::string(const std::string&)>& args,
                     const std::string& file) {
        sh(args("a"));
        sh(args("b"));
        ++compared;
        const auto a = slurp(root / ("a_" + name) / file), b = slurp(root / ("b_" + name) / file);
        if (a.empty() || a != b) mismatches.push_back(name);
    };
    const auto data = (root / "data").string();
    sh("synth --preset expert --seed 7 --out " + data);
    const auto data_again = (root / "data_again").string();
    sh("synth --preset expert --seed 7 --out " + data_again);
    ++compared;
    if (slurp(root / "data" / "dataset.csv") != slurp(root / "data_again" / "dataset.csv")) mismatches.push_back("synth");

    for (const std::string model : {"cgm-vae", "cgm-svae", "mlp", "mdn"}) {
        twice("train_" + model,
              [&](const std::string& tag) {
                  return "train --model " + model + " --data " + data + " --seed 7 --epochs 3 --hidden 16 --warmup-epochs 2 --out " +
                         (root / (tag + "_train_" + model)).string();
              },
              "checkpoint.json");
    }
    const auto vae_ck = (root / "a_train_cgm-vae" / "checkpoint.json").string();
    const auto svae_ck = (root / "a_train_cgm-svae" / "checkpoint.json").string();
    for (const std::string metric : {"ll", "jsd", "align"}) {
        twice("eval_" + metric,
              [&](const std::string& tag) {
                  return "eval --checkpoint " + vae_ck + " --data " + data + " --metric " + metric +
                         " --samples 20 --seed 3 --out " + (root / (tag + "_eval_" + metric)).string();
              },
              "report_" + metric + ".json");
    }
    twice("propose",
          [&](const std::string& tag) {
              return "propose --checkpoint " + vae_ck + " --record " + data + "/dataset.csv --k 20 --seed 3 --out " +
                     (root / (tag + "_propose")).string();
          },
          "proposals.csv");
    twice("personalize",
          [&](const std::string& tag) {
              return "personalize --checkpoint " + svae_ck + " --data " + data + " --user 4 --k 5 --seed 3 --out " +
                     (root / (tag + "_personalize")).string();
          },
          "personalize_user4.json");
    twice("curve",
          [&](const std::string& tag) {
              return "curve --checkpoint " + svae_ck + " --data " + data + " --samples 10 --max-users 5 --seed 3 --out " +
                     (root / (tag + "_curve")).string();
          },
          "curve.csv");

    for (const std::string model : {"cgm-vae", "cgm-svae", "mlp", "mdn"}) {
        const auto path = root / ("a_train_" + model) / "checkpoint.json";
        const auto first = slurp(path);
        const auto copy = root / ("resaved_" + model + ".json");
        save_checkpoint(load_checkpoint(path), copy);
        ++compared;
        if (slurp(copy) != first) mismatches.push_back("resave_" + model);
    }
    std::string detail = std::to_string(compared - mismatches.size()) + "/" + std::to_string(compared) +
                         " repeated outputs byte-identical";
    for (const auto& m : mismatches) detail += "; differs: " + m;
    return {mismatches.empty(), detail};
}

// Criterion 10 -----------------------------------------------------------

Outcome unit_values()
{
    std::vector<std::string> failures;
    std::size_t checked = 0;
    auto check = [&](const std::string& name, double got, double want, double tol) {
        ++checked;
        if (!(std::abs(got - want) <= tol)) failures.push_back(name + "=" + num(got, 12));
    };
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    const auto std1 = DiagGaussianParams::make({0.0}, {0.0});
    check("logpdf(0)", diag_gaussian_logpdf(std::vector{0.0}, std1), -0.918939, 1e-6);
    check("logpdf(0) exact", diag_gaussian_logpdf(std::vector{0.0}, std1), -half_log_2pi, 1e-12);
    check("logpdf(1)", diag_gaussian_logpdf(std::vector{1.0}, std1), -1.418939, 1e-6);
    check("logpdf 2-d", diag_gaussian_logpdf(std::vector{0.0, 0.0}, DiagGaussianParams::make({0.0, 0.0}, {0.0, 0.0})),
          -1.837877, 1e-6);
    const auto p = DiagGaussianParams::make({0.3, -1.2}, {0.5, -0.7});
    const auto zero_noise = reparam_sample(p, std::vector{0.0, 0.0});
    check("reparam zero noise", zero_noise[0] - 0.3 + zero_noise[1] + 1.2, 0.0, 0.0);
    check("reparam unit", reparam_sample(std1, std::vector{1.0})[0], 1.0, 0.0);
    check("kl identical", kl_diag_gaussians(p, p), 0.0, 1e-15);
    check("kl mean shift", kl_diag_gaussians(std1, DiagGaussianParams::make({1.0}, {0.0})), 0.5, 1e-12);
    const auto wide = DiagGaussianParams::make({0.0}, {1.0});
    check("kl N(0,e)", kl_diag_gaussians(wide, std1), 0.359141, 1e-6);
    check("kl N(0,e) exact", kl_diag_gaussians(wide, std1), 0.5 * (std::exp(1.0) - 2.0), 1e-12);
    const auto uni = CategoricalParams::uniform(2);
    check("cat kl uniform", categorical_kl(uni, uni), 0.0, 1e-15);
    check("cat kl degenerate", categorical_kl(CategoricalParams::make({1.0, 0.0}), uni), std::log(2.0), 1e-12);
    check("cat kl 0.75", categorical_kl(CategoricalParams::make({0.75, 0.25}), uni), 0.130812, 1e-6);
    check("cat kl 0.75 exact", categorical_kl(CategoricalParams::make({0.75, 0.25}), uni),
          0.75 * std::log(1.5) + 0.25 * std::log(0.5), 1e-12);
    const std::vector z{0.4, -0.3};
    check("gmm single", gmm_logpdf(z, GmmParams::make(CategoricalParams::make({1.0}), {p})),
          diag_gaussian_logpdf(z, p), 1e-12);
    check("gmm identical", gmm_logpdf(z, GmmParams::make(uni, {p, p})), diag_gaussian_logpdf(z, p), 1e-12);
    const auto far = DiagGaussianParams::make({40.0, 40.0}, {0.0, 0.0});
    const auto at = DiagGaussianParams::make({0.4, -0.3}, {0.0, 0.0});
    check("gmm far", gmm_logpdf(z, GmmParams::make(CategoricalParams::make({0.3, 0.7}), {at, far})),
          std::log(0.3) + diag_gaussian_logpdf(z, at), 1e-6);

    check("jsd identical", jsd_bits(std::vector{0.25, 0.75}, std::vector{0.25, 0.75}), 0.0, 1e-15);
    check("jsd disjoint", jsd_bits(std::vector{1.0, 0.0}, std::vector{0.0, 1.0}), 1.0, 1e-12);
    check("jsd (1,0)|(.5,.5)", jsd_bits(std::vector{1.0, 0.0}, std::vector{0.5, 0.5}), 0.311278, 1e-6);
    check("jsd (1,0)|(.5,.5) exact", jsd_bits(std::vector{1.0, 0.0}, std::vector{0.5, 0.5}),
          0.75 * std::log2(4.0 / 3.0), 1e-9);
    const Samples props{{0.0, 0.0}, {1.0, 1.0}, {2.0, 0.5}};
    check("align subset", align_proposals(props, Samples{{2.0, 0.5}, {0.0, 0.0}}).mse, 0.0, 0.0);
    check("align nearest", align_proposals(props, Samples{{0.9, 1.2}}).total_sq_error, 0.05, 1e-12);
    check("ll constant", summarize(std::vector<double>(10, -2.3)).std_error, 0.0, 0.0);

    std::string detail = std::to_string(checked - failures.size()) + "/" + std::to_string(checked) + " values within tolerance";
    for (const auto& f : failures) detail += "; " + f;
    return {failures.empty(), detail};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradient_correctness},
        {"ELBO/likelihood consistency", elbo_consistency},
        {"closed-form user posterior", posterior_exactness},
        {"multimodality recovery", multimodality},
        {"LL ordering", ll_ordering},
        {"user clustering", user_clustering},
        {"personalization trend", personalization_trend},
        {"alignment metric", alignment},
        {"determinism and persistence", determinism},
        {"distribution unit values", unit_values},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
