#pragma once

// Comparison models: a unimodal Gaussian MLP regressor and a mixture density
// network. Both are trained by maximizing the exact conditional log-likelihood.

#include <cstdint>
#include <span>
#include <vector>

#include "edit_suggest/latent_model.hpp"

namespace edit_suggest {

/// Lower bound on every MDN mixing weight.
inline constexpr double kMdnWeightFloor = 1e-6;

struct BaselineConfig {
    std::size_t x_dim = 1;
    std::size_t y_dim = 1;
    std::vector<std::size_t> hidden{64, 64};
    Activation activation = Activation::tanh;
    double init_scale = 1.0;
};

struct GaussianMlpModel {
    BaselineConfig config;
    MlpParams net;  // x -> gaussian over y

    static GaussianMlpModel init(const BaselineConfig& cfg, std::uint64_t seed);
    std::vector<NamedTensor> named_parameters();
    std::vector<Tensor*> parameters();
};

struct MdnModel {
    BaselineConfig config;
    std::size_t mixtures = 3;
    MlpParams net;  // x -> [M logits | M*Dy means | M*Dy log-variances]

    static MdnModel init(const BaselineConfig& cfg, std::size_t mixtures, std::uint64_t seed);
    std::vector<NamedTensor> named_parameters();
    std::vector<Tensor*> parameters();
};

/// Mixture parameters emitted by an MDN for a batch of inputs.
struct MdnVars {
    ad::Var log_weights;            // [B, M], floored
    std::vector<GaussianVars> comp;  // M entries of [B, Dy]
};

MdnVars mdn_head(ad::Graph& g, const MdnModel& model, ad::Var x);
/// Emitted mixture for one input, in dists types (over slider space).
GmmParams mdn_mixture(std::span<const double> x, const MdnModel& model);

ad::Var gaussian_mlp_loglik_graph(ad::Graph& g, const GaussianMlpModel& model, const Batch& batch);
ad::Var mdn_loglik_graph(ad::Graph& g, const MdnModel& model, const Batch& batch);

double gaussian_mlp_loglik(std::span<const double> x, std::span<const double> y,
                           const GaussianMlpModel& model);
double mdn_loglik(std::span<const double> x, std::span<const double> y, const MdnModel& model);

std::vector<double> gaussian_mlp_sample(std::span<const double> x, const GaussianMlpModel& model,
                                        std::uint64_t seed);
std::vector<double> mdn_sample(std::span<const double> x, const MdnModel& model,
                               std::uint64_t seed);

TrainResult<GaussianMlpModel> train_gaussian_mlp(std::span<const ImageEditRecord> train,
                                                 std::span<const ImageEditRecord> validation,
                                                 const TrainConfig& cfg,
                                                 const EpochCallback& on_epoch = {});

/// Uses cfg.components as the mixture count M.
TrainResult<MdnModel> train_mdn(std::span<const ImageEditRecord> train,
                                std::span<const ImageEditRecord> validation,
                                const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace edit_suggest
