#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "edit_suggest/autodiff.hpp"
#include "edit_suggest/tensor.hpp"

namespace edit_suggest {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. Minimizes: parameters move against the gradient.
class Adam {
public:
    explicit Adam(AdamConfig config = {})
        : config_(config)
    {
    }

    /// One update. grads[i] is the gradient for *params[i]; an empty tensor
    /// stands for an all-zero gradient.
    void step(std::span<Tensor* const> params, std::span<const Tensor> grads);

    std::int64_t steps() const { return t_; }
    const AdamConfig& config() const { return config_; }
    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

private:
    AdamConfig config_;
    std::int64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

/// Pulls the gradient of each parameter out of a backward() result, using an
/// empty tensor when the parameter did not take part in the graph.
std::vector<Tensor> collect_gradients(const ad::Gradients& grads, std::span<Tensor* const> params);

/// Max relative error |a - n| / max(|a|, |n|, 1e-4) between autodiff and
/// central finite differences over every coordinate of every parameter.
/// `objective` must rebuild the scalar function from the current parameter
/// values each time it is called.
double grad_check(const std::function<ad::Var(ad::Graph&)>& objective,
                  std::span<Tensor* const> params, double h = 1e-5);

}  // namespace edit_suggest
