#include "edit_suggest/nets.hpp"

#include <cmath>

#include "edit_suggest/rng.hpp"

namespace edit_suggest {

std::string to_string(Activation a)
{
    return a == Activation::tanh ? "tanh" : "relu";
}

std::string to_string(HeadKind h)
{
    switch (h) {
    case HeadKind::gaussian: return "gaussian";
    case HeadKind::softmax: return "softmax";
    case HeadKind::log_potential: return "log_potential";
    case HeadKind::mixture: return "mixture";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& s)
{
    if (s == "tanh") {
        return Activation::tanh;
    }
    if (s == "relu") {
        return Activation::relu;
    }
    throw ConfigError("unknown activation '" + s + "'");
}

HeadKind head_from_string(const std::string& s)
{
    for (auto h : {HeadKind::gaussian, HeadKind::softmax, HeadKind::log_potential, HeadKind::mixture}) {
        if (to_string(h) == s) {
            return h;
        }
    }
    throw ConfigError("unknown head '" + s + "'");
}

void NetConfig::validate() const
{
    if (input_dim < 1 || output_dim < 1) {
        throw ConfigError("net dims must be >= 1");
    }
    for (auto h : hidden) {
        if (h < 1) {
            throw ConfigError("hidden layer widths must be >= 1");
        }
    }
    if (head == HeadKind::gaussian && output_dim % 2 != 0) {
        throw ConfigError("gaussian head needs an even output dim, got " + std::to_string(output_dim));
    }
    if (!(init_scale >= 0.0)) {
        throw ConfigError("init scale must be >= 0");
    }
}

void MlpParams::append_parameters(const std::string& prefix, std::vector<NamedTensor>& out)
{
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back({prefix + ".w" + std::to_string(l), &weights[l]});
        out.push_back({prefix + ".b" + std::to_string(l), &biases[l]});
    }
}

MlpParams init_mlp(const NetConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    MlpParams net;
    net.config = cfg;
    Rng rng(seed);
    std::size_t fan_in = cfg.input_dim;
    auto add_layer = [&](std::size_t fan_out) {
        const double sd = cfg.init_scale / std::sqrt(static_cast<double>(fan_in));
        Tensor w = Tensor::zeros({fan_in, fan_out});
        for (auto& v : w.data()) {
            v = sd * rng.normal();
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(Tensor::zeros({1, fan_out}));
        fan_in = fan_out;
    };
    for (auto h : cfg.hidden) {
        add_layer(h);
    }
    add_layer(cfg.output_dim);
    return net;
}

ad::Var mlp_forward(ad::Graph& g, const MlpParams& net, ad::Var input)
{
    if (input.cols() != net.config.input_dim) {
        throw ShapeError("mlp input has " + std::to_string(input.cols()) + " columns, expected " +
                         std::to_string(net.config.input_dim));
    }
    auto h = input;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        h = ad::affine(h, g.parameter(net.weights[l]), g.parameter(net.biases[l]));
        if (l + 1 < net.num_layers()) {
            h = net.config.activation == Activation::tanh ? ad::tanh(h) : ad::relu(h);
        }
    }
    return h;
}

namespace {

void require_head(const MlpParams& net, HeadKind expected)
{
    if (net.config.head != expected) {
        throw ConfigError("network has a " + to_string(net.config.head) + " head, expected " +
                          to_string(expected));
    }
}

}  // namespace

GaussianVars apply_gaussian_head(ad::Graph& g, const MlpParams& net, ad::Var input)
{
    require_head(net, HeadKind::gaussian);
    auto out = mlp_forward(g, net, input);
    const auto half = net.config.output_dim / 2;
    return {ad::slice_cols(out, 0, half),
            ad::clamp(ad::slice_cols(out, half, 2 * half), kLogVarMin, kLogVarMax)};
}

CategoricalVars apply_softmax_head(ad::Graph& g, const MlpParams& net, ad::Var input)
{
    require_head(net, HeadKind::softmax);
    auto logits = mlp_forward(g, net, input);
    return {ad::softmax_rows(logits), ad::log_softmax_rows(logits)};
}

ad::Var apply_log_potential_head(ad::Graph& g, const MlpParams& net, ad::Var input)
{
    require_head(net, HeadKind::log_potential);
    return mlp_forward(g, net, input);
}

DiagGaussianParams apply_gaussian_head(const MlpParams& net, std::span<const double> input)
{
    ad::Graph g;
    auto p = apply_gaussian_head(g, net, g.constant(Tensor::row(input)));
    return DiagGaussianParams::make(p.mean.value().row_values(0), p.log_var.value().row_values(0));
}

CategoricalParams apply_softmax_head(const MlpParams& net, std::span<const double> input)
{
    ad::Graph g;
    auto p = apply_softmax_head(g, net, g.constant(Tensor::row(input)));
    return CategoricalParams::make(p.probs.value().row_values(0));
}

std::vector<double> apply_log_potential_head(const MlpParams& net, std::span<const double> input)
{
    ad::Graph g;
    return apply_log_potential_head(g, net, g.constant(Tensor::row(input))).value().row_values(0);
}

}  // namespace edit_suggest
