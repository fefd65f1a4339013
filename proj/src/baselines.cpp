#include "edit_suggest/baselines.hpp"

#include <cmath>

#include "edit_suggest/rng.hpp"
#include "edit_suggest/training.hpp"

namespace edit_suggest {

namespace {

constexpr double kMdnLogitBound = 30.0;
constexpr std::size_t kEvalChunk = 512;

template <class Model>
std::vector<Tensor*> tensors_of(Model& m)
{
    std::vector<Tensor*> out;
    for (auto& p : m.named_parameters()) {
        out.push_back(p.tensor);
    }
    return out;
}

template <class Model>
double mean_loglik(std::span<const ImageEditRecord> records, const Model& model,
                   ad::Var (*graph_fn)(ad::Graph&, const Model&, const Batch&))
{
    double total = 0.0;
    for (std::size_t start = 0; start < records.size(); start += kEvalChunk) {
        const auto n = std::min(kEvalChunk, records.size() - start);
        ad::Graph g;
        total += ad::sum(graph_fn(g, model, make_batch(records.subspan(start, n)))).value().item();
    }
    return total / static_cast<double>(records.size());
}

BaselineConfig baseline_config(std::span<const ImageEditRecord> train, const TrainConfig& cfg)
{
    if (train.empty()) {
        throw ConfigError("baseline training set is empty");
    }
    BaselineConfig bc;
    bc.x_dim = train.front().x.size();
    bc.y_dim = train.front().y.size();
    bc.hidden = cfg.hidden;
    bc.activation = cfg.activation;
    bc.init_scale = cfg.init_scale;
    return bc;
}

}  // namespace

GaussianMlpModel GaussianMlpModel::init(const BaselineConfig& cfg, std::uint64_t seed)
{
    GaussianMlpModel m;
    m.config = cfg;
    m.net = init_mlp({cfg.x_dim, cfg.hidden, 2 * cfg.y_dim, cfg.activation, HeadKind::gaussian,
                      cfg.init_scale},
                     derive_seed(seed, "init.mlp"));
    return m;
}

std::vector<NamedTensor> GaussianMlpModel::named_parameters()
{
    std::vector<NamedTensor> out;
    net.append_parameters("net", out);
    return out;
}

std::vector<Tensor*> GaussianMlpModel::parameters() { return tensors_of(*this); }

MdnModel MdnModel::init(const BaselineConfig& cfg, std::size_t mixtures, std::uint64_t seed)
{
    if (mixtures < 1) {
        throw ConfigError("MDN needs at least one mixture component");
    }
    MdnModel m;
    m.config = cfg;
    m.mixtures = mixtures;
    m.net = init_mlp({cfg.x_dim, cfg.hidden, mixtures * (1 + 2 * cfg.y_dim), cfg.activation,
                      HeadKind::mixture, cfg.init_scale},
                     derive_seed(seed, "init.mdn"));
    return m;
}

std::vector<NamedTensor> MdnModel::named_parameters()
{
    std::vector<NamedTensor> out;
    net.append_parameters("net", out);
    return out;
}

std::vector<Tensor*> MdnModel::parameters() { return tensors_of(*this); }

MdnVars mdn_head(ad::Graph& g, const MdnModel& model, ad::Var x)
{
    const auto M = model.mixtures;
    const auto D = model.config.y_dim;
    if (model.net.config.output_dim != M * (1 + 2 * D)) {
        throw ShapeError("MDN output dim does not match mixtures * (1 + 2 * y_dim)");
    }
    auto out = mlp_forward(g, model.net, x);
    auto logits = ad::clamp(ad::slice_cols(out, 0, M), -kMdnLogitBound, kMdnLogitBound);
    auto weights = ad::shift(ad::scale(ad::softmax_rows(logits), 1.0 - static_cast<double>(M) * kMdnWeightFloor),
                             kMdnWeightFloor);
    MdnVars v{ad::log(weights), {}};
    for (std::size_t m = 0; m < M; ++m) {
        const auto mean0 = M + m * D;
        const auto lv0 = M + M * D + m * D;
        v.comp.push_back({ad::slice_cols(out, mean0, mean0 + D),
                          ad::clamp(ad::slice_cols(out, lv0, lv0 + D), kLogVarMin, kLogVarMax)});
    }
    return v;
}

GmmParams mdn_mixture(std::span<const double> x, const MdnModel& model)
{
    ad::Graph g;
    auto v = mdn_head(g, model, g.constant(Tensor::row(x)));
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t m = 0; m < model.mixtures; ++m) {
        w.push_back(std::exp(v.log_weights.value()[m]));
        total += w.back();
    }
    for (auto& p : w) {
        p /= total;
    }
    std::vector<DiagGaussianParams> comps;
    for (const auto& c : v.comp) {
        comps.push_back(DiagGaussianParams::make(c.mean.value().row_values(0),
                                                 c.log_var.value().row_values(0)));
    }
    return GmmParams::make(CategoricalParams::make(std::move(w)), std::move(comps));
}

ad::Var gaussian_mlp_loglik_graph(ad::Graph& g, const GaussianMlpModel& model, const Batch& batch)
{
    auto p = apply_gaussian_head(g, model.net, g.constant(batch.x));
    return diag_gaussian_logpdf(g.constant(batch.y), p);
}

ad::Var mdn_loglik_graph(ad::Graph& g, const MdnModel& model, const Batch& batch)
{
    auto v = mdn_head(g, model, g.constant(batch.x));
    auto y = g.constant(batch.y);
    std::vector<ad::Var> per;
    for (const auto& c : v.comp) {
        per.push_back(diag_gaussian_logpdf(y, c));
    }
    return ad::logsumexp_rows(ad::add(ad::concat_cols(per), v.log_weights));
}

double gaussian_mlp_loglik(std::span<const double> x, std::span<const double> y,
                           const GaussianMlpModel& model)
{
    ImageEditRecord r{0, {x.begin(), x.end()}, {y.begin(), y.end()}, {}};
    return mean_loglik(std::span<const ImageEditRecord>(&r, 1), model, &gaussian_mlp_loglik_graph);
}

double mdn_loglik(std::span<const double> x, std::span<const double> y, const MdnModel& model)
{
    ImageEditRecord r{0, {x.begin(), x.end()}, {y.begin(), y.end()}, {}};
    return mean_loglik(std::span<const ImageEditRecord>(&r, 1), model, &mdn_loglik_graph);
}

std::vector<double> gaussian_mlp_sample(std::span<const double> x, const GaussianMlpModel& model,
                                        std::uint64_t seed)
{
    const auto p = apply_gaussian_head(model.net, x);
    Rng rng(derive_seed(seed, "mlp-sample"));
    std::vector<double> out(p.dim());
    for (std::size_t d = 0; d < p.dim(); ++d) {
        out[d] = p.mean[d] + std::exp(0.5 * p.log_var[d]) * rng.normal();
    }
    return out;
}

std::vector<double> mdn_sample(std::span<const double> x, const MdnModel& model, std::uint64_t seed)
{
    const auto gmm = mdn_mixture(x, model);
    Rng rng(derive_seed(seed, "mdn-sample"));
    const auto& comp = gmm.components[rng.categorical(gmm.weights.probs)];
    std::vector<double> out(comp.dim());
    for (std::size_t d = 0; d < comp.dim(); ++d) {
        out[d] = comp.mean[d] + std::exp(0.5 * comp.log_var[d]) * rng.normal();
    }
    return out;
}

TrainResult<GaussianMlpModel> train_gaussian_mlp(std::span<const ImageEditRecord> train,
                                                 std::span<const ImageEditRecord> validation,
                                                 const TrainConfig& cfg,
                                                 const EpochCallback& on_epoch)
{
    cfg.validate();
    const auto bc = baseline_config(train, cfg);
    check_dims(train, bc.x_dim, bc.y_dim);
    check_dims(validation, bc.x_dim, bc.y_dim);
    BatchObjective<GaussianMlpModel, ImageEditRecord> objective =
        [](ad::Graph& g, const GaussianMlpModel& m, std::span<const ImageEditRecord* const> items,
           const NoiseSource&) { return ad::mean(gaussian_mlp_loglik_graph(g, m, make_batch(items))); };
    std::function<double(const GaussianMlpModel&)> validate;
    if (!validation.empty()) {
        validate = [validation](const GaussianMlpModel& m) {
            return mean_loglik(validation, m, &gaussian_mlp_loglik_graph);
        };
    }
    return run_training(GaussianMlpModel::init(bc, derive_seed(cfg.seed, "init")), train, cfg,
                        cfg.batch_size, objective, validate, on_epoch);
}

TrainResult<MdnModel> train_mdn(std::span<const ImageEditRecord> train,
                                std::span<const ImageEditRecord> validation,
                                const TrainConfig& cfg, const EpochCallback& on_epoch)
{
    cfg.validate();
    const auto bc = baseline_config(train, cfg);
    check_dims(train, bc.x_dim, bc.y_dim);
    check_dims(validation, bc.x_dim, bc.y_dim);
    BatchObjective<MdnModel, ImageEditRecord> objective =
        [](ad::Graph& g, const MdnModel& m, std::span<const ImageEditRecord* const> items,
           const NoiseSource&) { return ad::mean(mdn_loglik_graph(g, m, make_batch(items))); };
    std::function<double(const MdnModel&)> validate;
    if (!validation.empty()) {
        validate = [validation](const MdnModel& m) {
            return mean_loglik(validation, m, &mdn_loglik_graph);
        };
    }
    return run_training(MdnModel::init(bc, cfg.components, derive_seed(cfg.seed, "init")), train,
                        cfg, cfg.batch_size, objective, validate, on_epoch);
}

}  // namespace edit_suggest
