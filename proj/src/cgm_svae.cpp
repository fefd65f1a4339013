#include "edit_suggest/cgm_svae.hpp"

#include <algorithm>
#include <cmath>

#include "edit_suggest/rng.hpp"
#include "edit_suggest/training.hpp"

namespace edit_suggest {

namespace {

std::vector<double> normalize_log(std::vector<double> scores)
{
    const double m = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double s : scores) {
        total += std::exp(s - m);
    }
    const double lse = m + std::log(total);
    for (auto& s : scores) {
        s -= lse;
    }
    return scores;
}

std::vector<double> log_weights_of(const LatentPrior& prior)
{
    return normalize_log(prior.logits.row_values(0));
}

std::vector<double> user_log_posterior_values(const UserRecordSet& user, const CgmSvaeModel& model)
{
    std::vector<std::vector<double>> potentials;
    potentials.reserve(user.size());
    for (const auto& r : user.records) {
        if (r.x.size() != model.config.x_dim || r.y.size() != model.config.y_dim) {
            throw ShapeError("user_posterior: record dims do not match model");
        }
        std::vector<double> xy = r.x;
        xy.insert(xy.end(), r.y.begin(), r.y.end());
        potentials.push_back(apply_log_potential_head(model.recog_r, xy));
    }
    auto scores = log_weights_of(model.prior);
    for (const auto& p : potentials) {
        for (std::size_t k = 0; k < scores.size(); ++k) {
            scores[k] += p[k];
        }
    }
    return normalize_log(std::move(scores));
}

std::vector<double> exp_all(std::vector<double> v)
{
    for (auto& x : v) {
        x = std::exp(x);
    }
    return v;
}

UserPosterior to_posterior(const std::vector<double>& log_q)
{
    return CategoricalParams::make(exp_all(log_q));
}

// User VLB image terms with q(s_u) held at uniform, so every component is fit
// to every user.
ad::Var warmup_user_graph(ad::Graph& g, const CgmSvaeModel& model, const UserRecordSet& user,
                          const NoiseSource& noise)
{
    const auto& c = model.config;
    const auto batch = make_batch(std::span<const ImageEditRecord>(user.records));
    auto x = g.constant(batch.x);
    auto y = g.constant(batch.y);
    auto xy = ad::concat_cols({x, y});
    auto prior = prior_vars(g, model.prior);
    ad::Var total;
    for (std::size_t k = 0; k < c.components; ++k) {
        auto qz = latent_posterior(g, model.recog_z, xy, k, c.components);
        auto z = reparam_sample(qz, g.constant(noise.rows(batch.keys, k, c.latent_dim)));
        auto images = ad::sum(decoder_loglik(g, model.decoder, z, x, y) -
                              (diag_gaussian_logpdf(z, qz) - diag_gaussian_logpdf(z, prior.component(k))));
        total = k == 0 ? images : total + images;
    }
    return ad::scale(total, 1.0 / static_cast<double>(c.components));
}

// Mean recognition latent of a user's images, averaged over the s one-hot.
std::vector<double> user_code(const UserRecordSet& user, const CgmSvaeModel& model)
{
    const auto& c = model.config;
    const auto batch = make_batch(std::span<const ImageEditRecord>(user.records));
    ad::Graph g;
    auto xy = ad::concat_cols({g.constant(batch.x), g.constant(batch.y)});
    std::vector<double> code(c.latent_dim, 0.0);
    const double w = 1.0 / static_cast<double>(c.components * user.size());
    for (std::size_t k = 0; k < c.components; ++k) {
        const auto& mean = latent_posterior(g, model.recog_z, xy, k, c.components).mean.value();
        for (std::size_t n = 0; n < mean.rows(); ++n) {
            for (std::size_t d = 0; d < c.latent_dim; ++d) {
                code[d] += w * mean(n, d);
            }
        }
    }
    return code;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return s;
}

// Lloyd iterations from a k-means++ start.
std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                                        std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<std::vector<double>> centers{points[static_cast<std::size_t>(rng.uniform() * static_cast<double>(points.size()))]};
    std::vector<double> d2(points.size());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = sq_dist(points[i], centers.front());
            for (const auto& c : centers) {
                d2[i] = std::min(d2[i], sq_dist(points[i], c));
            }
            total += d2[i];
        }
        centers.push_back(total > 0.0 ? points[rng.categorical(d2)] : centers.back());
    }
    std::vector<std::size_t> assign(points.size(), k);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < k; ++j) {
                if (sq_dist(points[i], centers[j]) < sq_dist(points[i], centers[best])) {
                    best = j;
                }
            }
            changed = changed || best != assign[i];
            assign[i] = best;
        }
        if (!changed) {
            break;
        }
        for (std::size_t j = 0; j < k; ++j) {
            std::vector<double> sum(points.front().size(), 0.0);
            std::size_t n = 0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (assign[i] == j) {
                    for (std::size_t d = 0; d < sum.size(); ++d) {
                        sum[d] += points[i][d];
                    }
                    ++n;
                }
            }
            if (n > 0) {
                for (auto& v : sum) {
                    v /= static_cast<double>(n);
                }
                centers[j] = std::move(sum);
            }
        }
    }
    return centers;
}

}  // namespace

CgmSvaeModel CgmSvaeModel::init(const ModelConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    CgmSvaeModel m;
    m.config = cfg;
    m.prior = LatentPrior::init(cfg.components, cfg.latent_dim, cfg.prior_spread,
                                derive_seed(seed, "init.prior"));
    m.decoder = init_mlp({cfg.latent_dim + cfg.x_dim, cfg.hidden, 2 * cfg.y_dim, cfg.activation,
                          HeadKind::gaussian, cfg.init_scale},
                         derive_seed(seed, "init.decoder"));
    m.recog_r = init_mlp({cfg.x_dim + cfg.y_dim, cfg.hidden, cfg.components, cfg.activation,
                          HeadKind::log_potential, cfg.init_scale},
                         derive_seed(seed, "init.recog_r"));
    // Potentials start at zero so q(s_u) begins at pi instead of saturating on
    // the sum of random per-image scores.
    auto& last = m.recog_r.weights.back();
    std::fill(last.storage().begin(), last.storage().end(), 0.0);
    m.recog_z = init_mlp({cfg.x_dim + cfg.y_dim + cfg.components, cfg.hidden, 2 * cfg.latent_dim,
                          cfg.activation, HeadKind::gaussian, cfg.init_scale},
                         derive_seed(seed, "init.recog_z"));
    return m;
}

std::vector<NamedTensor> CgmSvaeModel::named_parameters()
{
    std::vector<NamedTensor> out;
    prior.append_parameters("prior", out);
    decoder.append_parameters("decoder", out);
    recog_r.append_parameters("recog_r", out);
    recog_z.append_parameters("recog_z", out);
    return out;
}

std::vector<Tensor*> CgmSvaeModel::parameters()
{
    std::vector<Tensor*> out;
    for (auto& p : named_parameters()) {
        out.push_back(p.tensor);
    }
    return out;
}

UserPosterior user_posterior_from_potentials(std::span<const double> log_weights,
                                             const std::vector<std::vector<double>>& potentials)
{
    if (log_weights.empty()) {
        throw ShapeError("user_posterior: no components");
    }
    std::vector<double> scores(log_weights.begin(), log_weights.end());
    for (const auto& p : potentials) {
        if (p.size() != scores.size()) {
            throw ShapeError("user_posterior: potential has " + std::to_string(p.size()) +
                             " entries, expected " + std::to_string(scores.size()));
        }
        for (std::size_t k = 0; k < scores.size(); ++k) {
            scores[k] += p[k];
        }
    }
    return to_posterior(normalize_log(std::move(scores)));
}

UserPosterior user_posterior(const UserRecordSet& user, const CgmSvaeModel& model)
{
    return to_posterior(user_log_posterior_values(user, model));
}

ad::Var user_log_posterior(ad::Graph& g, const CgmSvaeModel& model, ad::Var x, ad::Var y)
{
    auto potentials = apply_log_potential_head(g, model.recog_r, ad::concat_cols({x, y}));
    auto log_pi = ad::log_softmax_rows(g.parameter(model.prior.logits));
    return ad::log_softmax_rows(ad::add(log_pi, ad::col_sums(potentials)));
}

ad::Var elbo_user_graph(ad::Graph& g, const CgmSvaeModel& model, const UserRecordSet& user,
                        const NoiseSource& noise)
{
    if (user.records.empty()) {
        throw ConfigError("elbo_user: user " + std::to_string(user.user_id) + " has no records");
    }
    const auto& c = model.config;
    check_dims(user.records, c.x_dim, c.y_dim);
    const auto batch = make_batch(std::span<const ImageEditRecord>(user.records));
    auto x = g.constant(batch.x);
    auto y = g.constant(batch.y);
    auto xy = ad::concat_cols({x, y});
    auto log_q = user_log_posterior(g, model, x, y);
    auto q = ad::exp(log_q);
    auto prior = prior_vars(g, model.prior);

    ad::Var total;
    for (std::size_t k = 0; k < c.components; ++k) {
        auto qz = latent_posterior(g, model.recog_z, xy, k, c.components);
        auto z = reparam_sample(qz, g.constant(noise.rows(batch.keys, k, c.latent_dim)));
        auto log_py = decoder_loglik(g, model.decoder, z, x, y);
        auto log_pz = diag_gaussian_logpdf(z, prior.component(k));
        auto log_qz = diag_gaussian_logpdf(z, qz);
        auto images = ad::sum(log_py - (log_qz - log_pz));
        auto weighted = ad::slice_cols(q, k, k + 1) * images;
        total = k == 0 ? weighted : total + weighted;
    }
    return total - categorical_kl(log_q, prior.log_weights);
}

double elbo_user(const UserRecordSet& user, const CgmSvaeModel& model, const NoiseSource& noise)
{
    ad::Graph g;
    return elbo_user_graph(g, model, user, noise).value().item();
}

TrainResult<CgmSvaeModel> train_cgm_svae(std::span<const UserRecordSet> train,
                                         std::span<const UserRecordSet> validation,
                                         const TrainConfig& cfg, const EpochCallback& on_epoch)
{
    cfg.validate();
    std::vector<UserRecordSet> users;
    for (const auto& u : train) {
        if (!u.records.empty()) {
            users.push_back(u);
        }
    }
    if (users.empty()) {
        throw ConfigError("train_cgm_svae: no users with records");
    }
    std::vector<UserRecordSet> val_users;
    for (const auto& u : validation) {
        if (!u.records.empty()) {
            val_users.push_back(u);
        }
    }
    const auto& first = users.front().records.front();
    const auto mc = cfg.model_config(first.x.size(), first.y.size());
    for (const auto& u : users) {
        check_dims(u.records, mc.x_dim, mc.y_dim);
    }
    for (const auto& u : val_users) {
        check_dims(u.records, mc.x_dim, mc.y_dim);
    }

    BatchObjective<CgmSvaeModel, UserRecordSet> objective =
        [](ad::Graph& g, const CgmSvaeModel& m, std::span<const UserRecordSet* const> batch,
           const NoiseSource& noise) {
            ad::Var total;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                auto v = elbo_user_graph(g, m, *batch[i], noise);
                total = i == 0 ? v : total + v;
            }
            return ad::scale(total, 1.0 / static_cast<double>(batch.size()));
        };

    std::function<double(const CgmSvaeModel&)> validate;
    if (!val_users.empty()) {
        const NoiseSource val_noise(derive_seed(cfg.seed, "val-noise"));
        validate = [val_users, val_noise](const CgmSvaeModel& m) {
            double total = 0.0;
            for (const auto& u : val_users) {
                total += elbo_user(u, m, val_noise);
            }
            return total / static_cast<double>(val_users.size());
        };
    }
    auto model = CgmSvaeModel::init(mc, derive_seed(cfg.seed, "init"));
    if (cfg.warmup_epochs > 0) {
        // Uniform q(s_u) lets the latent space organize before any user commits
        // to a component; the means then start at the user clusters.
        BatchObjective<CgmSvaeModel, UserRecordSet> warmup =
            [](ad::Graph& g, const CgmSvaeModel& m, std::span<const UserRecordSet* const> batch,
               const NoiseSource& noise) {
                ad::Var total;
                for (std::size_t i = 0; i < batch.size(); ++i) {
                    auto v = warmup_user_graph(g, m, *batch[i], noise);
                    total = i == 0 ? v : total + v;
                }
                return ad::scale(total, 1.0 / static_cast<double>(batch.size()));
            };
        auto warm_cfg = cfg;
        warm_cfg.epochs = cfg.warmup_epochs;
        warm_cfg.seed = derive_seed(cfg.seed, "warmup");
        model = run_training(std::move(model), std::span<const UserRecordSet>(users), warm_cfg,
                             cfg.user_batch_size, warmup, {}, {})
                    .model;
        std::vector<std::vector<double>> codes;
        for (const auto& u : users) {
            codes.push_back(user_code(u, model));
        }
        const auto centers = kmeans(codes, mc.components, derive_seed(cfg.seed, "kmeans"));
        for (std::size_t k = 0; k < mc.components; ++k) {
            model.prior.logits[k] = 0.0;
            for (std::size_t d = 0; d < mc.latent_dim; ++d) {
                model.prior.means(k, d) = centers[k][d];
            }
        }
    }
    return run_training(std::move(model), std::span<const UserRecordSet>(users), cfg,
                        cfg.user_batch_size, objective, validate, on_epoch);
}

std::vector<double> component_loglik(const ImageEditRecord& record, const CgmSvaeModel& model,
                                     std::size_t samples, std::uint64_t seed)
{
    const auto& c = model.config;
    if (samples < 1) {
        throw ConfigError("component_loglik: sample count must be >= 1");
    }
    if (record.x.size() != c.x_dim || record.y.size() != c.y_dim) {
        throw ShapeError("component_loglik: record dims do not match model");
    }
    const NoiseSource noise(derive_seed(seed, "component-ll"));
    const auto key = record.content_hash();
    ad::Graph g;
    auto x = g.constant(Tensor::row(record.x));
    auto y = g.constant(Tensor::row(record.y));
    auto xy = ad::concat_cols({x, y});
    auto xrep = ad::add(g.constant(Tensor::zeros({samples, c.x_dim})), x);
    auto prior = prior_vars(g, model.prior);

    std::vector<double> out(c.components);
    for (std::size_t k = 0; k < c.components; ++k) {
        auto qz = latent_posterior(g, model.recog_z, xy, k, c.components);
        auto eps = g.constant(Tensor::matrix(samples, c.latent_dim,
                                             noise.draw(key, k, c.latent_dim, samples)));
        auto z = reparam_sample(qz, eps);
        auto log_w = decoder_loglik(g, model.decoder, z, xrep, y) +
                     diag_gaussian_logpdf(z, prior.component(k)) - diag_gaussian_logpdf(z, qz);
        const auto values = log_w.value().data();
        out[k] = log_mean_exp(std::vector<double>(values.begin(), values.end())).value;
    }
    return out;
}

double personalized_predictive_ll(const UserRecordSet& user, std::size_t n_cond,
                                  std::size_t n_eval, const CgmSvaeModel& model,
                                  std::size_t samples, std::uint64_t seed)
{
    if (n_eval < 1) {
        throw ConfigError("personalized_predictive_ll: n_eval must be >= 1");
    }
    if (n_cond + n_eval > user.size()) {
        throw ConfigError("personalized_predictive_ll: user " + std::to_string(user.user_id) +
                          " has " + std::to_string(user.size()) + " records, needs " +
                          std::to_string(n_cond + n_eval));
    }
    UserRecordSet cond{user.user_id, {user.records.begin(),
                                      user.records.begin() + static_cast<std::ptrdiff_t>(n_cond)}};
    const auto log_q = user_log_posterior_values(cond, model);

    double total = 0.0;
    for (std::size_t n = user.size() - n_eval; n < user.size(); ++n) {
        const auto comp = component_loglik(user.records[n], model, samples, seed);
        std::vector<double> joint(comp.size());
        for (std::size_t k = 0; k < comp.size(); ++k) {
            joint[k] = log_q[k] + comp[k];
        }
        const double m = *std::max_element(joint.begin(), joint.end());
        double s = 0.0;
        for (double v : joint) {
            s += std::exp(v - m);
        }
        total += m + std::log(s);
    }
    return total / static_cast<double>(n_eval);
}

std::size_t map_user_category(const UserRecordSet& user, const CgmSvaeModel& model)
{
    const auto q = user_posterior(user, model);
    std::size_t best = 0;
    for (std::size_t k = 1; k < q.size(); ++k) {
        if (q.probs[k] > q.probs[best]) {
            best = k;
        }
    }
    return best;
}

std::vector<std::vector<double>> propose_personalized(std::span<const double> x, std::size_t count,
                                                      const UserPosterior& posterior,
                                                      const CgmSvaeModel& model,
                                                      std::uint64_t seed)
{
    const auto& c = model.config;
    if (x.size() != c.x_dim) {
        throw ShapeError("propose_personalized: feature dim mismatch");
    }
    if (posterior.size() != c.components) {
        throw ShapeError("propose_personalized: posterior has wrong length");
    }
    if (count < 1) {
        throw ConfigError("propose_personalized: count must be >= 1");
    }
    const auto gmm = model.prior.to_gmm();
    Rng rng(derive_seed(seed, "propose-personalized"));
    Tensor z = Tensor::zeros({count, c.latent_dim});
    for (std::size_t i = 0; i < count; ++i) {
        const auto& comp = gmm.components[rng.categorical(posterior.probs)];
        for (std::size_t d = 0; d < c.latent_dim; ++d) {
            z(i, d) = comp.mean[d] + std::exp(0.5 * comp.log_var[d]) * rng.normal();
        }
    }
    ad::Graph g;
    auto xs = ad::add(g.constant(Tensor::zeros({count, c.x_dim})), g.constant(Tensor::row(x)));
    auto out = apply_gaussian_head(g, model.decoder, ad::concat_cols({g.constant(std::move(z)), xs}));
    std::vector<std::vector<double>> proposals;
    for (std::size_t i = 0; i < count; ++i) {
        proposals.push_back(out.mean.value().row_values(i));
    }
    return proposals;
}

}  // namespace edit_suggest
