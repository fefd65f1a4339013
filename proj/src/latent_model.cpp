#include "edit_suggest/latent_model.hpp"

#include <algorithm>
#include <cmath>

#include "edit_suggest/rng.hpp"

namespace edit_suggest {

void ModelConfig::validate() const
{
    if (x_dim < 1 || y_dim < 1 || latent_dim < 1 || components < 1) {
        throw ConfigError("model dims and component count must be >= 1");
    }
    for (auto h : hidden) {
        if (h < 1) {
            throw ConfigError("hidden widths must be >= 1");
        }
    }
}

void TrainConfig::validate() const
{
    if (batch_size < 1 || user_batch_size < 1) {
        throw ConfigError("batch sizes must be >= 1");
    }
    if (latent_dim < 1 || components < 1) {
        throw ConfigError("latent dim and component count must be >= 1");
    }
    if (!(adam.learning_rate > 0.0)) {
        throw ConfigError("learning rate must be > 0");
    }
}

ModelConfig TrainConfig::model_config(std::size_t x_dim, std::size_t y_dim) const
{
    ModelConfig m;
    m.x_dim = x_dim;
    m.y_dim = y_dim;
    m.latent_dim = latent_dim;
    m.components = components;
    m.hidden = hidden;
    m.activation = activation;
    m.init_scale = init_scale;
    m.prior_spread = prior_spread;
    m.validate();
    return m;
}

LatentPrior LatentPrior::init(std::size_t components, std::size_t dim, double spread,
                              std::uint64_t seed)
{
    LatentPrior p;
    p.logits = Tensor::zeros({1, components});
    p.means = Tensor::zeros({components, dim});
    p.log_vars = Tensor::zeros({components, dim});
    Rng rng(seed);
    for (auto& v : p.means.data()) {
        v = spread * rng.normal();
    }
    return p;
}

GmmParams LatentPrior::to_gmm() const
{
    const auto L = components();
    const double m = *std::max_element(logits.data().begin(), logits.data().end());
    std::vector<double> w(L);
    double total = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
        w[k] = std::exp(logits[k] - m);
        total += w[k];
    }
    for (auto& v : w) {
        v /= total;
    }
    std::vector<DiagGaussianParams> comps;
    for (std::size_t k = 0; k < L; ++k) {
        comps.push_back(DiagGaussianParams::make(means.row_values(k), log_vars.row_values(k)));
    }
    return GmmParams::make(CategoricalParams::make(std::move(w)), std::move(comps));
}

void LatentPrior::append_parameters(const std::string& prefix, std::vector<NamedTensor>& out)
{
    out.push_back({prefix + ".logits", &logits});
    out.push_back({prefix + ".means", &means});
    out.push_back({prefix + ".log_vars", &log_vars});
}

GaussianVars PriorVars::component(std::size_t k) const
{
    return {ad::slice_rows(means, k, k + 1), ad::slice_rows(log_vars, k, k + 1)};
}

ad::Var PriorVars::log_weight(std::size_t k) const
{
    return ad::slice_cols(log_weights, k, k + 1);
}

PriorVars prior_vars(ad::Graph& g, const LatentPrior& prior)
{
    return {ad::log_softmax_rows(g.parameter(prior.logits)), g.parameter(prior.means),
            ad::clamp(g.parameter(prior.log_vars), kLogVarMin, kLogVarMax)};
}

std::vector<double> NoiseSource::draw(std::uint64_t key, std::size_t component, std::size_t dim,
                                      std::size_t count) const
{
    Rng rng(combine_seed(combine_seed(seed_, key), component));
    return rng.normals(dim * count);
}

Tensor NoiseSource::rows(std::span<const std::uint64_t> keys, std::size_t component,
                         std::size_t dim) const
{
    Tensor out = Tensor::zeros({keys.size(), dim});
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto eps = draw(keys[i], component, dim);
        std::copy(eps.begin(), eps.end(), &out.data()[i * dim]);
    }
    return out;
}

Tensor one_hot_rows(std::size_t rows, std::size_t n, std::size_t k)
{
    Tensor out = Tensor::zeros({rows, n});
    for (std::size_t i = 0; i < rows; ++i) {
        out(i, k) = 1.0;
    }
    return out;
}

ad::Var decoder_loglik(ad::Graph& g, const MlpParams& decoder, ad::Var z, ad::Var x, ad::Var y)
{
    auto out = apply_gaussian_head(g, decoder, ad::concat_cols({z, x}));
    return diag_gaussian_logpdf(y, out);
}

GaussianVars latent_posterior(ad::Graph& g, const MlpParams& recog_z, ad::Var xy, std::size_t k,
                              std::size_t components)
{
    auto hot = g.constant(one_hot_rows(xy.rows(), components, k));
    return apply_gaussian_head(g, recog_z, ad::concat_cols({xy, hot}));
}

LoglikEstimate log_mean_exp(std::span<const double> log_weights)
{
    if (log_weights.empty()) {
        throw ConfigError("log_mean_exp: no samples");
    }
    const double m = *std::max_element(log_weights.begin(), log_weights.end());
    const auto n = static_cast<double>(log_weights.size());
    std::vector<double> w(log_weights.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::exp(log_weights[i] - m);
        sum += w[i];
    }
    const double mean = sum / n;
    LoglikEstimate est;
    est.value = m + std::log(mean);
    if (w.size() > 1) {
        double ss = 0.0;
        for (double v : w) {
            ss += (v - mean) * (v - mean);
        }
        est.std_error = std::sqrt(ss / (n - 1.0) / n) / mean;
    }
    return est;
}

}  // namespace edit_suggest
