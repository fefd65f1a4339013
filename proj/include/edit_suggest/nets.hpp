#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edit_suggest/autodiff.hpp"
#include "edit_suggest/dists.hpp"

namespace edit_suggest {

enum class Activation { tanh, relu };

/// How the raw network output is interpreted.
///   gaussian      - [mean | log_var] halves, log_var clamped
///   softmax       - probabilities over the outputs
///   log_potential - unnormalized log-scores, no normalization
///   mixture       - raw output parsed by the caller (MDN)
enum class HeadKind { gaussian, softmax, log_potential, mixture };

std::string to_string(Activation a);
std::string to_string(HeadKind h);
Activation activation_from_string(const std::string& s);
HeadKind head_from_string(const std::string& s);

struct NetConfig {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden{64, 64};
    std::size_t output_dim = 1;
    Activation activation = Activation::tanh;
    HeadKind head = HeadKind::gaussian;
    double init_scale = 1.0;

    void validate() const;
};

/// A parameter tensor together with its checkpoint name.
struct NamedTensor {
    std::string name;
    Tensor* tensor;
};

struct MlpParams {
    NetConfig config;
    std::vector<Tensor> weights;  // [fan_in, fan_out] per layer
    std::vector<Tensor> biases;   // [1, fan_out] per layer

    std::size_t num_layers() const { return weights.size(); }
    void append_parameters(const std::string& prefix, std::vector<NamedTensor>& out);
};

/// Weights ~ N(0, (scale / sqrt(fan_in))^2), biases zero. Deterministic in seed.
MlpParams init_mlp(const NetConfig& cfg, std::uint64_t seed);

/// Raw network output, [B, input_dim] -> [B, output_dim].
ad::Var mlp_forward(ad::Graph& g, const MlpParams& net, ad::Var input);

struct CategoricalVars {
    ad::Var probs;
    ad::Var log_probs;
};

GaussianVars apply_gaussian_head(ad::Graph& g, const MlpParams& net, ad::Var input);
CategoricalVars apply_softmax_head(ad::Graph& g, const MlpParams& net, ad::Var input);
ad::Var apply_log_potential_head(ad::Graph& g, const MlpParams& net, ad::Var input);

DiagGaussianParams apply_gaussian_head(const MlpParams& net, std::span<const double> input);
CategoricalParams apply_softmax_head(const MlpParams& net, std::span<const double> input);
std::vector<double> apply_log_potential_head(const MlpParams& net, std::span<const double> input);

}  // namespace edit_suggest
