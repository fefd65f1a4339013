#include "edit_suggest/optim.hpp"

#include <algorithm>
#include <cmath>

namespace edit_suggest {

void Adam::step(std::span<Tensor* const> params, std::span<const Tensor> grads)
{
    if (params.size() != grads.size()) {
        throw ShapeError("adam: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
    }
    if (m_.empty()) {
        for (const auto* p : params) {
            m_.push_back(Tensor::zeros(p->shape()));
            v_.push_back(Tensor::zeros(p->shape()));
        }
    }
    if (m_.size() != params.size()) {
        throw ShapeError("adam: parameter count changed between steps");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!m_[i].same_shape(*params[i]) ||
            (!grads[i].empty() && !grads[i].same_shape(*params[i]))) {
            throw ShapeError("adam: shape mismatch for parameter " + std::to_string(i));
        }
    }

    ++t_;
    const auto& c = config_;
    const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double g = grads[i].empty() ? 0.0 : grads[i][j];
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
            const double mhat = m[j] / bias1;
            const double vhat = v[j] / bias2;
            p[j] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
        }
    }
}

std::vector<Tensor> collect_gradients(const ad::Gradients& grads, std::span<Tensor* const> params)
{
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto* p : params) {
        auto it = grads.find(p);
        out.push_back(it == grads.end() ? Tensor() : it->second);
    }
    return out;
}

double grad_check(const std::function<ad::Var(ad::Graph&)>& objective,
                  std::span<Tensor* const> params, double h)
{
    std::vector<Tensor> analytic;
    {
        ad::Graph g;
        auto root = objective(g);
        analytic = collect_gradients(g.backward(root), params);
    }
    auto evaluate = [&] {
        ad::Graph g;
        return objective(g).value().item();
    };

    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double saved = p[j];
            p[j] = saved + h;
            const double up = evaluate();
            p[j] = saved - h;
            const double down = evaluate();
            p[j] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[i].empty() ? 0.0 : analytic[i][j];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace edit_suggest
