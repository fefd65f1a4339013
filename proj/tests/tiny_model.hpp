#pragma once

// Small trained CGM-VAE shared by the unit tests and the acceptance run.

#include <vector>

#include "edit_suggest/cgm_vae.hpp"
#include "edit_suggest/rng.hpp"

namespace fixture {

using namespace edit_suggest;

// Two slider modes along (1, -1) plus a feature-dependent shift.
inline std::vector<ImageEditRecord> bimodal_records(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<ImageEditRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        ImageEditRecord r;
        r.x = {rng.normal(), rng.normal()};
        const double mode = rng.uniform() < 0.5 ? -0.5 : 0.5;
        r.y = {mode + 0.2 * r.x[0] + 0.1 * rng.normal(), -mode + 0.2 * r.x[1] + 0.1 * rng.normal()};
        out.push_back(r);
    }
    return out;
}

// Latent dim 1, L=2, hidden width 8, trained so the recognition nets are sensible.
inline const CgmVaeModel& trained_tiny_model()
{
    static const CgmVaeModel model = [] {
        const auto data = bimodal_records(400, 1);
        TrainConfig cfg;
        cfg.epochs = 300;
        cfg.batch_size = 32;
        cfg.latent_dim = 1;
        cfg.components = 2;
        cfg.hidden = {8};
        cfg.seed = 6;
        cfg.adam.learning_rate = 5e-3;
        return train_cgm_vae(data, {}, cfg).model;
    }();
    return model;
}

}  // namespace fixture
