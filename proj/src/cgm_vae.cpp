#include "edit_suggest/cgm_vae.hpp"

#include <cmath>

#include "edit_suggest/rng.hpp"
#include "edit_suggest/training.hpp"

namespace edit_suggest {

namespace {

constexpr std::size_t kEvalChunk = 512;

NetConfig gaussian_net(const ModelConfig& c, std::size_t in, std::size_t out_dim)
{
    return {in, c.hidden, 2 * out_dim, c.activation, HeadKind::gaussian, c.init_scale};
}

}  // namespace

CgmVaeModel CgmVaeModel::init(const ModelConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    CgmVaeModel m;
    m.config = cfg;
    m.prior = LatentPrior::init(cfg.components, cfg.latent_dim, cfg.prior_spread,
                                derive_seed(seed, "init.prior"));
    m.decoder = init_mlp(gaussian_net(cfg, cfg.latent_dim + cfg.x_dim, cfg.y_dim),
                         derive_seed(seed, "init.decoder"));
    m.recog_s = init_mlp({cfg.x_dim + cfg.y_dim, cfg.hidden, cfg.components, cfg.activation,
                          HeadKind::softmax, cfg.init_scale},
                         derive_seed(seed, "init.recog_s"));
    m.recog_z = init_mlp(gaussian_net(cfg, cfg.x_dim + cfg.y_dim + cfg.components, cfg.latent_dim),
                         derive_seed(seed, "init.recog_z"));
    return m;
}

std::vector<NamedTensor> CgmVaeModel::named_parameters()
{
    std::vector<NamedTensor> out;
    prior.append_parameters("prior", out);
    decoder.append_parameters("decoder", out);
    recog_s.append_parameters("recog_s", out);
    recog_z.append_parameters("recog_z", out);
    return out;
}

std::vector<Tensor*> CgmVaeModel::parameters()
{
    std::vector<Tensor*> out;
    for (auto& p : named_parameters()) {
        out.push_back(p.tensor);
    }
    return out;
}

ad::Var elbo_graph(ad::Graph& g, const CgmVaeModel& model, const Batch& batch,
                   const NoiseSource& noise)
{
    const auto& c = model.config;
    if (batch.x.cols() != c.x_dim || batch.y.cols() != c.y_dim) {
        throw ShapeError("elbo: batch dims (" + std::to_string(batch.x.cols()) + ", " +
                         std::to_string(batch.y.cols()) + ") do not match model");
    }
    auto x = g.constant(batch.x);
    auto y = g.constant(batch.y);
    auto xy = ad::concat_cols({x, y});
    auto qs = apply_softmax_head(g, model.recog_s, xy);
    auto prior = prior_vars(g, model.prior);

    ad::Var total;
    for (std::size_t k = 0; k < c.components; ++k) {
        auto qz = latent_posterior(g, model.recog_z, xy, k, c.components);
        auto z = reparam_sample(qz, g.constant(noise.rows(batch.keys, k, c.latent_dim)));
        auto log_py = decoder_loglik(g, model.decoder, z, x, y);
        auto log_pz = diag_gaussian_logpdf(z, prior.component(k));
        auto log_qz = diag_gaussian_logpdf(z, qz);
        auto log_qs = ad::slice_cols(qs.log_probs, k, k + 1);
        auto term = log_py + log_pz + prior.log_weight(k) - log_qz - log_qs;
        auto weighted = ad::slice_cols(qs.probs, k, k + 1) * term;
        total = k == 0 ? weighted : total + weighted;
    }
    return total;
}

double elbo(std::span<const ImageEditRecord> records, const CgmVaeModel& model,
            const NoiseSource& noise)
{
    if (records.empty()) {
        throw ConfigError("elbo: empty batch");
    }
    double total = 0.0;
    for (std::size_t start = 0; start < records.size(); start += kEvalChunk) {
        const auto n = std::min(kEvalChunk, records.size() - start);
        ad::Graph g;
        total += ad::sum(elbo_graph(g, model, make_batch(records.subspan(start, n)), noise))
                     .value()
                     .item();
    }
    return total / static_cast<double>(records.size());
}

TrainResult<CgmVaeModel> train_cgm_vae(std::span<const ImageEditRecord> train,
                                       std::span<const ImageEditRecord> validation,
                                       const TrainConfig& cfg, const EpochCallback& on_epoch)
{
    cfg.validate();
    if (train.empty()) {
        throw ConfigError("train_cgm_vae: empty training set");
    }
    const auto mc = cfg.model_config(train.front().x.size(), train.front().y.size());
    check_dims(train, mc.x_dim, mc.y_dim);
    check_dims(validation, mc.x_dim, mc.y_dim);

    BatchObjective<CgmVaeModel, ImageEditRecord> objective =
        [](ad::Graph& g, const CgmVaeModel& m, std::span<const ImageEditRecord* const> items,
           const NoiseSource& noise) { return ad::mean(elbo_graph(g, m, make_batch(items), noise)); };

    std::function<double(const CgmVaeModel&)> validate;
    if (!validation.empty()) {
        const NoiseSource val_noise(derive_seed(cfg.seed, "val-noise"));
        validate = [validation, val_noise](const CgmVaeModel& m) {
            return elbo(validation, m, val_noise);
        };
    }
    return run_training(CgmVaeModel::init(mc, derive_seed(cfg.seed, "init")), train, cfg,
                        cfg.batch_size, objective, validate, on_epoch);
}

std::vector<std::vector<double>> propose_edits(std::span<const double> x, std::size_t count,
                                               const CgmVaeModel& model, std::uint64_t seed)
{
    const auto& c = model.config;
    if (x.size() != c.x_dim) {
        throw ShapeError("propose_edits: feature dim " + std::to_string(x.size()) +
                         ", expected " + std::to_string(c.x_dim));
    }
    if (count < 1) {
        throw ConfigError("propose_edits: count must be >= 1");
    }
    const auto gmm = model.prior.to_gmm();
    Rng rng(derive_seed(seed, "propose"));
    Tensor z = Tensor::zeros({count, c.latent_dim});
    Tensor xs = Tensor::zeros({count, c.x_dim});
    for (std::size_t i = 0; i < count; ++i) {
        const auto s = rng.categorical(gmm.weights.probs);
        const auto& comp = gmm.components[s];
        for (std::size_t d = 0; d < c.latent_dim; ++d) {
            z(i, d) = comp.mean[d] + std::exp(0.5 * comp.log_var[d]) * rng.normal();
        }
        std::copy(x.begin(), x.end(), &xs.data()[i * c.x_dim]);
    }
    ad::Graph g;
    auto out = apply_gaussian_head(g, model.decoder,
                                   ad::concat_cols({g.constant(std::move(z)), g.constant(std::move(xs))}));
    std::vector<std::vector<double>> proposals;
    for (std::size_t i = 0; i < count; ++i) {
        proposals.push_back(out.mean.value().row_values(i));
    }
    return proposals;
}

LoglikEstimate predictive_loglik(std::span<const double> x, std::span<const double> y,
                                 const CgmVaeModel& model, std::size_t samples, std::uint64_t seed)
{
    const auto& c = model.config;
    if (samples < 1) {
        throw ConfigError("predictive_loglik: sample count must be >= 1");
    }
    if (x.size() != c.x_dim || y.size() != c.y_dim) {
        throw ShapeError("predictive_loglik: record dims do not match model");
    }
    std::vector<double> xy(x.begin(), x.end());
    xy.insert(xy.end(), y.begin(), y.end());
    const auto qs = apply_softmax_head(model.recog_s, xy);
    std::vector<DiagGaussianParams> qz;
    for (std::size_t k = 0; k < c.components; ++k) {
        auto in = xy;
        for (std::size_t j = 0; j < c.components; ++j) {
            in.push_back(j == k ? 1.0 : 0.0);
        }
        qz.push_back(apply_gaussian_head(model.recog_z, in));
    }
    const auto gmm = model.prior.to_gmm();

    // Draw (s_i, z_i) from the proposal and gather per-sample parameters.
    Rng rng(derive_seed(seed, "predictive-ll"));
    const auto S = samples;
    const auto D = c.latent_dim;
    Tensor z = Tensor::zeros({S, D});
    Tensor q_mean = Tensor::zeros({S, D});
    Tensor q_lv = Tensor::zeros({S, D});
    Tensor p_mean = Tensor::zeros({S, D});
    Tensor p_lv = Tensor::zeros({S, D});
    std::vector<double> log_ratio_s(S);
    for (std::size_t i = 0; i < S; ++i) {
        const auto s = rng.categorical(qs.probs);
        for (std::size_t d = 0; d < D; ++d) {
            q_mean(i, d) = qz[s].mean[d];
            q_lv(i, d) = qz[s].log_var[d];
            p_mean(i, d) = gmm.components[s].mean[d];
            p_lv(i, d) = gmm.components[s].log_var[d];
            z(i, d) = q_mean(i, d) + std::exp(0.5 * q_lv(i, d)) * rng.normal();
        }
        log_ratio_s[i] = std::log(gmm.weights.probs[s]) - std::log(qs.probs[s]);
    }

    ad::Graph g;
    auto zv = g.constant(std::move(z));
    auto xs = g.constant(Tensor::matrix(1, c.x_dim, std::vector<double>(x.begin(), x.end())));
    auto ys = g.constant(Tensor::matrix(1, c.y_dim, std::vector<double>(y.begin(), y.end())));
    auto xrep = ad::add(g.constant(Tensor::zeros({S, c.x_dim})), xs);
    auto log_py = decoder_loglik(g, model.decoder, zv, xrep, ys);
    auto log_pz = diag_gaussian_logpdf(zv, {g.constant(std::move(p_mean)), g.constant(std::move(p_lv))});
    auto log_qz = diag_gaussian_logpdf(zv, {g.constant(std::move(q_mean)), g.constant(std::move(q_lv))});
    auto log_w = log_py + log_pz - log_qz;

    std::vector<double> lw(S);
    for (std::size_t i = 0; i < S; ++i) {
        lw[i] = log_w.value()[i] + log_ratio_s[i];
    }
    return log_mean_exp(lw);
}

}  // namespace edit_suggest
