#pragma once

// A hierarchical model with a 1-D latent, linear decoder and shared component
// variance, for which every quantity has a closed form:
//   z | s=k ~ N(mu_k, v),  y | x, z ~ N(a z + B x + b, sigma2 I)
//   =>  y | x, s=k ~ N(a mu_k + B x + b, C),  C = v a a^T + sigma2 I.
// Because C is shared, the per-class log-likelihood differences and the exact
// z-posterior are affine in (x, y, onehot(s)), so single-layer recognition nets
// can represent them exactly.

#include <cmath>
#include <numbers>
#include <vector>

#include "edit_suggest/cgm_svae.hpp"
#include "edit_suggest/rng.hpp"

namespace oracle {

struct LinearGaussian {
    std::vector<double> a{0.8, -0.5};
    std::vector<std::vector<double>> B{{0.3, -0.2}, {0.1, 0.4}};  // [Dy][Dx]
    std::vector<double> b{0.05, -0.1};
    double sigma2 = 0.04;
    double v = 0.25;
    std::vector<double> mu{-2.0, 0.0, 2.0};
    std::vector<double> pi{0.2, 0.5, 0.3};

    std::size_t dx() const { return B.front().size(); }
    std::size_t dy() const { return a.size(); }
    std::size_t L() const { return mu.size(); }

    double a_dot_a() const
    {
        double s = 0.0;
        for (double ai : a) {
            s += ai * ai;
        }
        return s;
    }

    // Residual y - B x - b.
    std::vector<double> residual(const std::vector<double>& x, const std::vector<double>& y) const
    {
        std::vector<double> r(dy());
        for (std::size_t j = 0; j < dy(); ++j) {
            r[j] = y[j] - b[j];
            for (std::size_t i = 0; i < dx(); ++i) {
                r[j] -= B[j][i] * x[i];
            }
        }
        return r;
    }

    // C^{-1} u via Sherman-Morrison.
    std::vector<double> c_inv(const std::vector<double>& u) const
    {
        double au = 0.0;
        for (std::size_t j = 0; j < dy(); ++j) {
            au += a[j] * u[j];
        }
        const double denom = sigma2 * sigma2 * (1.0 + v * a_dot_a() / sigma2);
        std::vector<double> out(dy());
        for (std::size_t j = 0; j < dy(); ++j) {
            out[j] = u[j] / sigma2 - v * a[j] * au / denom;
        }
        return out;
    }

    double log_det_c() const
    {
        return static_cast<double>(dy()) * std::log(sigma2) + std::log1p(v * a_dot_a() / sigma2);
    }

    /// Exact log p(y | x, s = k).
    double loglik(const std::vector<double>& x, const std::vector<double>& y, std::size_t k) const
    {
        auto r = residual(x, y);
        for (std::size_t j = 0; j < dy(); ++j) {
            r[j] -= a[j] * mu[k];
        }
        const auto ci = c_inv(r);
        double quad = 0.0;
        for (std::size_t j = 0; j < dy(); ++j) {
            quad += r[j] * ci[j];
        }
        return -0.5 * (static_cast<double>(dy()) * std::log(2.0 * std::numbers::pi) + log_det_c() + quad);
    }

    double posterior_precision() const { return 1.0 / v + a_dot_a() / sigma2; }

    /// Builds the model with exact recognition networks. `recog_noise` perturbs
    /// the z-recognition weights to make the proposal inexact.
    edit_suggest::CgmSvaeModel model(double recog_noise = 0.0, std::uint64_t seed = 0) const
    {
        using namespace edit_suggest;
        ModelConfig cfg;
        cfg.x_dim = dx();
        cfg.y_dim = dy();
        cfg.latent_dim = 1;
        cfg.components = L();
        cfg.hidden = {};
        auto m = CgmSvaeModel::init(cfg, seed);
        for (std::size_t k = 0; k < L(); ++k) {
            m.prior.logits[k] = std::log(pi[k]);
            m.prior.means(k, 0) = mu[k];
            m.prior.log_vars(k, 0) = std::log(v);
        }

        // Decoder input (z, x) -> (mean, log_var).
        auto& dw = m.decoder.weights[0];
        auto& db = m.decoder.biases[0];
        for (std::size_t j = 0; j < dy(); ++j) {
            for (std::size_t r = 0; r < dw.rows(); ++r) {
                dw(r, j) = r == 0 ? a[j] : B[j][r - 1];
                dw(r, dy() + j) = 0.0;
            }
            db[j] = b[j];
            db[dy() + j] = std::log(sigma2);
        }

        // r_k = (a mu_k)^T C^{-1} (y - Bx - b) - 0.5 mu_k^2 a^T C^{-1} a.
        const auto ca = c_inv(a);
        double a_ca = 0.0;
        for (std::size_t j = 0; j < dy(); ++j) {
            a_ca += a[j] * ca[j];
        }
        auto& rw = m.recog_r.weights[0];
        auto& rb = m.recog_r.biases[0];
        for (std::size_t k = 0; k < L(); ++k) {
            for (std::size_t i = 0; i < dx(); ++i) {
                double w = 0.0;
                for (std::size_t j = 0; j < dy(); ++j) {
                    w -= ca[j] * B[j][i];
                }
                rw(i, k) = mu[k] * w;
            }
            double cb = 0.0;
            for (std::size_t j = 0; j < dy(); ++j) {
                rw(dx() + j, k) = mu[k] * ca[j];
                cb += ca[j] * b[j];
            }
            rb[k] = -mu[k] * cb - 0.5 * mu[k] * mu[k] * a_ca;
        }

        // z | x, y, k ~ N(P^{-1}(mu_k / v + a^T (y - Bx - b) / sigma2), P^{-1}).
        const double P = posterior_precision();
        auto& zw = m.recog_z.weights[0];
        auto& zb = m.recog_z.biases[0];
        double ab = 0.0;
        for (std::size_t j = 0; j < dy(); ++j) {
            ab += a[j] * b[j];
        }
        for (std::size_t r = 0; r < zw.rows(); ++r) {
            zw(r, 1) = 0.0;
        }
        for (std::size_t i = 0; i < dx(); ++i) {
            double w = 0.0;
            for (std::size_t j = 0; j < dy(); ++j) {
                w -= a[j] * B[j][i];
            }
            zw(i, 0) = w / (sigma2 * P);
        }
        for (std::size_t j = 0; j < dy(); ++j) {
            zw(dx() + j, 0) = a[j] / (sigma2 * P);
        }
        for (std::size_t k = 0; k < L(); ++k) {
            zw(dx() + dy() + k, 0) = mu[k] / (v * P) - ab / (sigma2 * P);
        }
        zb[0] = 0.0;
        zb[1] = -std::log(P);

        if (recog_noise > 0.0) {
            Rng rng(derive_seed(seed, "perturb"));
            for (auto& w : zw.storage()) {
                w += recog_noise * rng.normal();
            }
            for (auto& w : zb.storage()) {
                w += recog_noise * rng.normal();
            }
        }
        return m;
    }

    /// Draws n records of one user whose class is k.
    edit_suggest::UserRecordSet sample_user(std::int64_t id, std::size_t k, std::size_t n,
                                            std::uint64_t seed) const
    {
        edit_suggest::Rng rng(seed);
        edit_suggest::UserRecordSet u;
        u.user_id = id;
        for (std::size_t i = 0; i < n; ++i) {
            edit_suggest::ImageEditRecord r;
            r.user_id = id;
            for (std::size_t d = 0; d < dx(); ++d) {
                r.x.push_back(rng.normal());
            }
            const double z = mu[k] + std::sqrt(v) * rng.normal();
            for (std::size_t j = 0; j < dy(); ++j) {
                double y = a[j] * z + b[j] + std::sqrt(sigma2) * rng.normal();
                for (std::size_t d = 0; d < dx(); ++d) {
                    y += B[j][d] * r.x[d];
                }
                r.y.push_back(y);
            }
            u.records.push_back(r);
        }
        return u;
    }

    /// Brute-force posterior p(s_u | records) by enumeration in probability space.
    std::vector<double> brute_force_posterior(const edit_suggest::UserRecordSet& u) const
    {
        // Per-record scaling keeps the products in range; it cancels on normalization.
        std::vector<double> post(pi);
        for (const auto& r : u.records) {
            std::vector<double> lik(L());
            double top = -INFINITY;
            for (std::size_t k = 0; k < L(); ++k) {
                lik[k] = loglik(r.x, r.y, k);
                top = std::max(top, lik[k]);
            }
            for (std::size_t k = 0; k < L(); ++k) {
                post[k] *= std::exp(lik[k] - top);
            }
            double z = 0.0;
            for (double p : post) {
                z += p;
            }
            for (auto& p : post) {
                p /= z;
            }
        }
        return post;
    }
};

}  // namespace oracle
