#pragma once

// Conditional Gaussian-mixture VAE.
//
// Generative model, per record:
//   s ~ Categorical(pi),  z | s ~ N(mu_s, Sigma_s),
//   y | x, z ~ N(decoder_mean(z, x), decoder_var(z, x)).
// Variational family q(s | x, y) q(z | x, y, s). The cluster index is
// marginalized exactly in the ELBO; z uses one reparameterized sample per
// (record, component).

#include <cstdint>
#include <span>
#include <vector>

#include "edit_suggest/latent_model.hpp"

namespace edit_suggest {

struct CgmVaeModel {
    ModelConfig config;
    LatentPrior prior;
    MlpParams decoder;  // concat(z, x) -> gaussian over y
    MlpParams recog_s;  // concat(x, y) -> softmax over L
    MlpParams recog_z;  // concat(x, y, onehot(s)) -> gaussian over z

    static CgmVaeModel init(const ModelConfig& cfg, std::uint64_t seed);

    std::vector<NamedTensor> named_parameters();
    std::vector<Tensor*> parameters();
};

/// Per-record ELBO, [B, 1].
ad::Var elbo_graph(ad::Graph& g, const CgmVaeModel& model, const Batch& batch,
                   const NoiseSource& noise);

/// Mean per-record ELBO over a nonempty batch.
double elbo(std::span<const ImageEditRecord> records, const CgmVaeModel& model,
            const NoiseSource& noise);

TrainResult<CgmVaeModel> train_cgm_vae(std::span<const ImageEditRecord> train,
                                       std::span<const ImageEditRecord> validation,
                                       const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// K slider proposals for features x: s ~ pi, z ~ N(mu_s, Sigma_s), return the
/// decoder mean. Deterministic in seed.
std::vector<std::vector<double>> propose_edits(std::span<const double> x, std::size_t count,
                                               const CgmVaeModel& model, std::uint64_t seed);

/// Importance-sampled log p(y | x) with q(s | x, y) q(z | x, y, s) as proposal.
LoglikEstimate predictive_loglik(std::span<const double> x, std::span<const double> y,
                                 const CgmVaeModel& model, std::size_t samples, std::uint64_t seed);

}  // namespace edit_suggest
