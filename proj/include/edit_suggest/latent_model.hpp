#pragma once

// Pieces shared by the two latent-variable models: the learnable Gaussian
// mixture prior over the latent space, keyed reparameterization noise, the
// model/training configuration and the decoder likelihood.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "edit_suggest/autodiff.hpp"
#include "edit_suggest/dists.hpp"
#include "edit_suggest/nets.hpp"
#include "edit_suggest/optim.hpp"
#include "edit_suggest/records.hpp"

namespace edit_suggest {

/// Architecture of a CGM-VAE / CGM-SVAE.
struct ModelConfig {
    std::size_t x_dim = 1;
    std::size_t y_dim = 1;
    std::size_t latent_dim = 2;
    std::size_t components = 3;
    std::vector<std::size_t> hidden{64, 64};
    Activation activation = Activation::tanh;
    double init_scale = 1.0;
    /// Standard deviation of the initial mixture means.
    double prior_spread = 0.1;

    void validate() const;
};

/// Optimization settings shared by every trainer.
struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    /// Users per step for the hierarchical model.
    std::size_t user_batch_size = 8;
    std::uint64_t seed = 0;
    AdamConfig adam;
    std::size_t latent_dim = 2;
    std::size_t components = 3;
    std::vector<std::size_t> hidden{64, 64};
    Activation activation = Activation::tanh;
    double init_scale = 1.0;
    double prior_spread = 0.1;
    /// CGM-SVAE only: epochs run with q(s_u) held at uniform before the mixture
    /// means are placed by k-means on per-user latent codes. Not counted in
    /// `epochs` and not logged.
    std::size_t warmup_epochs = 10;

    void validate() const;
    ModelConfig model_config(std::size_t x_dim, std::size_t y_dim) const;
};

/// Learnable mixture prior p(s) p(z | s): softmax weights, free means and
/// log-variances (clamped to the dists range when used).
struct LatentPrior {
    Tensor logits;    // [1, L]
    Tensor means;     // [L, D]
    Tensor log_vars;  // [L, D]

    static LatentPrior init(std::size_t components, std::size_t dim, double spread,
                            std::uint64_t seed);
    std::size_t components() const { return logits.cols(); }
    std::size_t dim() const { return means.cols(); }
    GmmParams to_gmm() const;
    void append_parameters(const std::string& prefix, std::vector<NamedTensor>& out);
};

struct PriorVars {
    ad::Var log_weights;  // [1, L]
    ad::Var means;        // [L, D]
    ad::Var log_vars;     // [L, D]

    GaussianVars component(std::size_t k) const;
    ad::Var log_weight(std::size_t k) const;
};

PriorVars prior_vars(ad::Graph& g, const LatentPrior& prior);

/// Standard-normal noise keyed by (seed, record content, component). The same
/// record always receives the same noise, independent of batch position.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed)
        : seed_(seed)
    {
    }

    std::uint64_t seed() const { return seed_; }
    std::vector<double> draw(std::uint64_t key, std::size_t component, std::size_t dim,
                             std::size_t count = 1) const;
    /// [keys.size(), dim] noise rows for one mixture component.
    Tensor rows(std::span<const std::uint64_t> keys, std::size_t component, std::size_t dim) const;

private:
    std::uint64_t seed_;
};

/// One-hot rows [rows, n] with a 1 in column k.
Tensor one_hot_rows(std::size_t rows, std::size_t n, std::size_t k);

/// log p(y | x, z) under a gaussian-head decoder fed concat(z, x). [B, 1]
ad::Var decoder_loglik(ad::Graph& g, const MlpParams& decoder, ad::Var z, ad::Var x, ad::Var y);

/// q(z | x, y, s = k) from a recognition net fed concat(x, y, onehot(k)).
GaussianVars latent_posterior(ad::Graph& g, const MlpParams& recog_z, ad::Var xy,
                              std::size_t k, std::size_t components);

/// Monte Carlo estimate of a log-likelihood with its standard error.
struct LoglikEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// log(mean(exp(log_weights))) with a delta-method standard error.
LoglikEstimate log_mean_exp(std::span<const double> log_weights);

struct EpochLog {
    std::size_t epoch = 0;
    double train_objective = 0.0;
    double val_objective = 0.0;
};

template <class Model>
struct TrainResult {
    Model model;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Raised when the loss becomes non-finite during training.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace edit_suggest
