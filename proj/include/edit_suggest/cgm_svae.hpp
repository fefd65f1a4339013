#pragma once

// Hierarchical CGM model with one cluster index per user.
//
//   s_u ~ Categorical(pi),  z_un | s_u ~ N(mu_{s_u}, Sigma_{s_u}),
//   y_un | x_un, z_un ~ N(decoder(z_un, x_un)).
//
// The user posterior is built in closed form from per-image recognition
// potentials r(y, x):  log q(s_u = k) = log pi_k + sum_n r_k(y_un, x_un) + const.
// Mixture parameters are point estimates learned by gradient together with the
// networks.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "edit_suggest/latent_model.hpp"

namespace edit_suggest {

struct CgmSvaeModel {
    ModelConfig config;
    LatentPrior prior;
    MlpParams decoder;  // concat(z, x) -> gaussian over y
    MlpParams recog_r;  // concat(x, y) -> L log-potentials
    MlpParams recog_z;  // concat(x, y, onehot(s)) -> gaussian over z

    static CgmSvaeModel init(const ModelConfig& cfg, std::uint64_t seed);

    std::vector<NamedTensor> named_parameters();
    std::vector<Tensor*> parameters();
};

using UserPosterior = CategoricalParams;

/// Normalizes log_weights + column sums of potentials ([N, L] rows). With
/// N = 0 this returns softmax(log_weights).
UserPosterior user_posterior_from_potentials(std::span<const double> log_weights,
                                             const std::vector<std::vector<double>>& potentials);

UserPosterior user_posterior(const UserRecordSet& user, const CgmSvaeModel& model);

/// Graph form: [1, L] log q(s_u) for stacked user records.
ad::Var user_log_posterior(ad::Graph& g, const CgmSvaeModel& model, ad::Var x, ad::Var y);

/// Per-user variational lower bound (summed over the user's images).
ad::Var elbo_user_graph(ad::Graph& g, const CgmSvaeModel& model, const UserRecordSet& user,
                        const NoiseSource& noise);
double elbo_user(const UserRecordSet& user, const CgmSvaeModel& model, const NoiseSource& noise);

/// Trains on the users' records; validation uses each validation user's held
/// records (users without validation records are skipped).
TrainResult<CgmSvaeModel> train_cgm_svae(std::span<const UserRecordSet> train,
                                         std::span<const UserRecordSet> validation,
                                         const TrainConfig& cfg,
                                         const EpochCallback& on_epoch = {});

/// Conditions q(s_u) on the first n_cond records and returns the mean
/// importance-sampled log sum_k q(k) p(y | x, s = k) over the last n_eval
/// records. The evaluation records do not depend on n_cond, and the sampling
/// noise is keyed by record, so values for different n_cond are directly
/// comparable.
double personalized_predictive_ll(const UserRecordSet& user, std::size_t n_cond,
                                  std::size_t n_eval, const CgmSvaeModel& model,
                                  std::size_t samples, std::uint64_t seed);

/// Importance-sampled log p(y | x, s = k) for each component, using
/// q(z | x, y, k) as proposal.
std::vector<double> component_loglik(const ImageEditRecord& record, const CgmSvaeModel& model,
                                     std::size_t samples, std::uint64_t seed);

/// Argmax of the user posterior; ties go to the lowest index.
std::size_t map_user_category(const UserRecordSet& user, const CgmSvaeModel& model);

/// Personalized proposals: s ~ q(s_u), z ~ N(mu_s, Sigma_s), decoder mean.
std::vector<std::vector<double>> propose_personalized(std::span<const double> x, std::size_t count,
                                                      const UserPosterior& posterior,
                                                      const CgmSvaeModel& model,
                                                      std::uint64_t seed);

}  // namespace edit_suggest
