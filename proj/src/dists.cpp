#include "edit_suggest/dists.hpp"

#include <algorithm>
#include <cmath>

namespace edit_suggest {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require_same_dim(std::size_t a, std::size_t b, const char* what)
{
    if (a != b) {
        throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
    }
}

ad::Var row_constant(ad::Graph& g, std::span<const double> v)
{
    return g.constant(Tensor::row(v));
}

GaussianVars constants(ad::Graph& g, const DiagGaussianParams& p)
{
    return {row_constant(g, p.mean), row_constant(g, p.log_var)};
}

}  // namespace

DiagGaussianParams DiagGaussianParams::make(std::vector<double> mean, std::vector<double> log_var)
{
    require_same_dim(mean.size(), log_var.size(), "DiagGaussianParams");
    if (mean.empty()) {
        throw ShapeError("DiagGaussianParams: empty");
    }
    for (auto& lv : log_var) {
        lv = std::clamp(lv, kLogVarMin, kLogVarMax);
    }
    return {std::move(mean), std::move(log_var)};
}

CategoricalParams CategoricalParams::make(std::vector<double> probs)
{
    if (probs.empty()) {
        throw ShapeError("CategoricalParams: empty");
    }
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) {
            throw std::invalid_argument("CategoricalParams: negative or NaN probability");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("CategoricalParams: probabilities sum to " +
                                    std::to_string(total));
    }
    return {std::move(probs)};
}

CategoricalParams CategoricalParams::uniform(std::size_t n)
{
    if (n == 0) {
        throw ShapeError("CategoricalParams: empty");
    }
    return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

GmmParams GmmParams::make(CategoricalParams weights, std::vector<DiagGaussianParams> components)
{
    if (components.empty()) {
        throw ShapeError("GmmParams: need at least one component");
    }
    require_same_dim(weights.size(), components.size(), "GmmParams weights/components");
    for (const auto& c : components) {
        require_same_dim(c.dim(), components.front().dim(), "GmmParams component");
    }
    return {std::move(weights), std::move(components)};
}

double diag_gaussian_logpdf(std::span<const double> y, const DiagGaussianParams& p)
{
    require_same_dim(y.size(), p.dim(), "diag_gaussian_logpdf");
    ad::Graph g;
    return diag_gaussian_logpdf(row_constant(g, y), constants(g, p)).value().item();
}

std::vector<double> reparam_sample(const DiagGaussianParams& p, std::span<const double> noise)
{
    require_same_dim(noise.size(), p.dim(), "reparam_sample");
    ad::Graph g;
    return reparam_sample(constants(g, p), row_constant(g, noise)).value().row_values(0);
}

double kl_diag_gaussians(const DiagGaussianParams& q, const DiagGaussianParams& p)
{
    require_same_dim(q.dim(), p.dim(), "kl_diag_gaussians");
    ad::Graph g;
    return kl_diag_gaussians(constants(g, q), constants(g, p)).value().item();
}

double categorical_kl(const CategoricalParams& q, const CategoricalParams& p)
{
    require_same_dim(q.size(), p.size(), "categorical_kl");
    double kl = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q.probs[k] == 0.0) {
            continue;
        }
        if (p.probs[k] <= 0.0) {
            throw std::invalid_argument("categorical_kl: prior has zero mass at index " +
                                        std::to_string(k) + " where q has mass");
        }
        kl += q.probs[k] * (std::log(q.probs[k]) - std::log(p.probs[k]));
    }
    return kl;
}

double gmm_logpdf(std::span<const double> z, const GmmParams& gm)
{
    require_same_dim(z.size(), gm.dim(), "gmm_logpdf");
    // Zero-weight components contribute nothing; skipping them keeps log(0)
    // out of the graph.
    std::vector<double> log_w;
    std::vector<double> means;
    std::vector<double> log_vars;
    for (std::size_t k = 0; k < gm.num_components(); ++k) {
        if (gm.weights.probs[k] <= 0.0) {
            continue;
        }
        const auto& c = gm.components[k];
        log_w.push_back(std::log(gm.weights.probs[k]));
        means.insert(means.end(), c.mean.begin(), c.mean.end());
        log_vars.insert(log_vars.end(), c.log_var.begin(), c.log_var.end());
    }
    const auto live = log_w.size();
    ad::Graph g;
    return gmm_logpdf(row_constant(g, z), row_constant(g, log_w),
                      g.constant(Tensor::matrix(live, gm.dim(), std::move(means))),
                      g.constant(Tensor::matrix(live, gm.dim(), std::move(log_vars))))
        .value()
        .item();
}

ad::Var diag_gaussian_logpdf(ad::Var y, const GaussianVars& p)
{
    // -1/2 sum_d [log 2pi + lv + (y - m)^2 exp(-lv)]
    auto diff = ad::sub(y, p.mean);
    auto quad = ad::mul(ad::mul(diff, diff), ad::exp(ad::neg(p.log_var)));
    auto per_dim = ad::shift(ad::add(quad, p.log_var), kLog2Pi);
    if (per_dim.cols() != y.cols()) {
        throw ShapeError("diag_gaussian_logpdf: dimension mismatch");
    }
    return ad::scale(ad::row_sums(per_dim), -0.5);
}

ad::Var reparam_sample(const GaussianVars& p, ad::Var noise)
{
    return ad::add(p.mean, ad::mul(ad::exp(ad::scale(p.log_var, 0.5)), noise));
}

ad::Var kl_diag_gaussians(const GaussianVars& q, const GaussianVars& p)
{
    // 1/2 sum_d [lv_p - lv_q + (exp(lv_q) + (m_q - m_p)^2) exp(-lv_p) - 1]
    auto diff = ad::sub(q.mean, p.mean);
    auto ratio = ad::mul(ad::add(ad::exp(q.log_var), ad::mul(diff, diff)), ad::exp(ad::neg(p.log_var)));
    auto per_dim = ad::shift(ad::add(ad::sub(p.log_var, q.log_var), ratio), -1.0);
    return ad::scale(ad::row_sums(per_dim), 0.5);
}

ad::Var categorical_kl(ad::Var log_q, ad::Var log_p)
{
    return ad::row_sums(ad::mul(ad::exp(log_q), ad::sub(log_q, log_p)));
}

ad::Var gmm_logpdf(ad::Var z, ad::Var log_weights, ad::Var means, ad::Var log_vars)
{
    const auto L = means.rows();
    if (log_weights.cols() != L || log_vars.rows() != L || means.cols() != z.cols()) {
        throw ShapeError("gmm_logpdf: dimension mismatch");
    }
    std::vector<ad::Var> per_component;
    per_component.reserve(L);
    for (std::size_t k = 0; k < L; ++k) {
        GaussianVars comp{ad::slice_rows(means, k, k + 1), ad::slice_rows(log_vars, k, k + 1)};
        per_component.push_back(diag_gaussian_logpdf(z, comp));
    }
    return ad::logsumexp_rows(ad::add(ad::concat_cols(per_component), log_weights));
}

}  // namespace edit_suggest
