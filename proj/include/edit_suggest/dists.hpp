#pragma once

// Diagonal Gaussians, categoricals and Gaussian mixtures.
//
// Every density comes in two flavours: a value-level function over plain
// vectors, and a graph-level function over batched ad::Var rows that
// participates in autodiff. The value-level functions are thin wrappers that
// evaluate the graph-level code on constants, so both share one formula.

#include <span>
#include <vector>

#include "edit_suggest/autodiff.hpp"

namespace edit_suggest {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

struct DiagGaussianParams {
    std::vector<double> mean;
    std::vector<double> log_var;

    /// Validates lengths and clamps log_var into [kLogVarMin, kLogVarMax].
    static DiagGaussianParams make(std::vector<double> mean, std::vector<double> log_var);
    std::size_t dim() const { return mean.size(); }
};

struct CategoricalParams {
    std::vector<double> probs;

    /// Entries must be nonnegative and sum to 1 within 1e-12.
    static CategoricalParams make(std::vector<double> probs);
    static CategoricalParams uniform(std::size_t n);
    std::size_t size() const { return probs.size(); }
};

struct GmmParams {
    CategoricalParams weights;
    std::vector<DiagGaussianParams> components;

    static GmmParams make(CategoricalParams weights, std::vector<DiagGaussianParams> components);
    std::size_t num_components() const { return components.size(); }
    std::size_t dim() const { return components.front().dim(); }
};

double diag_gaussian_logpdf(std::span<const double> y, const DiagGaussianParams& p);
std::vector<double> reparam_sample(const DiagGaussianParams& p, std::span<const double> noise);
double kl_diag_gaussians(const DiagGaussianParams& q, const DiagGaussianParams& p);
double categorical_kl(const CategoricalParams& q, const CategoricalParams& p);
double gmm_logpdf(std::span<const double> z, const GmmParams& g);

/// Batched diagonal Gaussian: rows of mean/log_var, either [B, D] or a
/// single [1, D] row broadcast over the batch.
struct GaussianVars {
    ad::Var mean;
    ad::Var log_var;
};

/// log N(y; mean, exp(log_var)) per row, [B, D] -> [B, 1].
ad::Var diag_gaussian_logpdf(ad::Var y, const GaussianVars& p);
/// mean + exp(log_var / 2) * noise.
ad::Var reparam_sample(const GaussianVars& p, ad::Var noise);
/// Closed-form KL(q || p) per row, [B, 1].
ad::Var kl_diag_gaussians(const GaussianVars& q, const GaussianVars& p);
/// KL between categoricals given as log-probabilities, per row, [B, 1].
ad::Var categorical_kl(ad::Var log_q, ad::Var log_p);
/// log sum_k w_k N(z; mean_k, exp(log_var_k)) per row of z.
/// log_weights is [1, L]; means and log_vars are [L, D].
ad::Var gmm_logpdf(ad::Var z, ad::Var log_weights, ad::Var means, ad::Var log_vars);

}  // namespace edit_suggest
