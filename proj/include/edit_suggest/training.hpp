#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "edit_suggest/latent_model.hpp"
#include "edit_suggest/rng.hpp"

namespace edit_suggest {

/// Minibatch objective to maximize, averaged over the batch items.
template <class Model, class Item>
using BatchObjective =
    std::function<ad::Var(ad::Graph&, const Model&, std::span<const Item* const>, const NoiseSource&)>;

/// Adam on the negated objective with per-epoch shuffling, keeping the model
/// from the epoch with the best validation objective. Without a validator the
/// epoch's mean training objective is used for selection.
template <class Model, class Item>
TrainResult<Model> run_training(Model model, std::span<const Item> train, const TrainConfig& cfg,
                                std::size_t batch_size,
                                const BatchObjective<Model, Item>& objective,
                                const std::function<double(const Model&)>& validate,
                                const EpochCallback& on_epoch)
{
    if (train.empty()) {
        throw ConfigError("training set is empty");
    }
    if (batch_size == 0) {
        throw ConfigError("batch size must be >= 1");
    }
    auto params = model.parameters();
    Adam adam(cfg.adam);

    TrainResult<Model> result{model, {}, 0};
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::uint64_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng(derive_seed(cfg.seed, "shuffle", epoch)).shuffle(order.begin(), order.end());
        double total = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const auto stop = std::min(order.size(), start + batch_size);
            std::vector<const Item*> items;
            for (auto i = start; i < stop; ++i) {
                items.push_back(&train[order[i]]);
            }
            const NoiseSource noise(derive_seed(cfg.seed, "train-noise", step));
            try {
                ad::Graph g;
                auto obj = objective(g, model, items, noise);
                auto grads = g.backward(ad::neg(obj));
                adam.step(params, collect_gradients(grads, params));
                total += obj.value().item() * static_cast<double>(items.size());
                seen += items.size();
            } catch (const NumericError& e) {
                throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                                       ", step " + std::to_string(step) + ": " + e.what());
            }
            for (const auto* p : params) {
                if (!p->all_finite()) {
                    throw TrainingDiverged("non-finite parameter after step " +
                                           std::to_string(step) + " of epoch " +
                                           std::to_string(epoch));
                }
            }
            ++step;
        }
        EpochLog entry{epoch, total / static_cast<double>(seen), 0.0};
        try {
            entry.val_objective = validate ? validate(model) : entry.train_objective;
        } catch (const NumericError& e) {
            throw TrainingDiverged("validation failed after epoch " + std::to_string(epoch) + ": " +
                                   e.what());
        }
        result.log.push_back(entry);
        if (on_epoch) {
            on_epoch(entry);
        }
        if (entry.val_objective > best) {
            best = entry.val_objective;
            result.model = model;
            result.best_epoch = epoch;
        }
    }
    return result;
}

}  // namespace edit_suggest
