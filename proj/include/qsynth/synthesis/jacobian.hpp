#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/nn/model.hpp"
#include "qsynth/nn/train.hpp"
#include "qsynth/oracle.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/synthesis/active.hpp"
#include "qsynth/synthesis/config.hpp"
#include "qsynth/synthesis/trace.hpp"

namespace qsynth::synthesis {

/// One Jacobian-augmentation step per epoch of `data`:
/// x + step * sign(grad_x J(x, yhat)) with yhat the substitute's own label.
template <DifferentiableClassifier Substitute>
std::vector<Epoch> jacobian_augment(std::span<const Epoch> epochs, const Substitute& substitute, double step) {
    if (!(step > 0.0)) throw InvalidArgument("jacobian augmentation: step must be > 0");
    std::vector<Epoch> out;
    out.reserve(epochs.size());
    for (const Epoch& x : epochs) {
        const Label own = substitute.predict(x);
        Epoch moved = sign_of(substitute.input_gradient(x, own));
        moved *= step;
        moved += x;
        out.push_back(std::move(moved));
    }
    return out;
}

template <DifferentiableClassifier Substitute>
std::vector<Epoch> jacobian_augment(const LabeledSet& data, const Substitute& substitute, double step) {
    return jacobian_augment(std::span<const Epoch>(data.epochs()), substitute, step);
}

/// Substitute training with Jacobian-based augmentation (the baseline).
///
/// Same shape as train_substitute_active, except each round steps once from
/// every epoch already in the training set. Uncapped, N rounds cost
/// |initial| * (2^N - 1) labels on top of the initial |initial|.
template <LabelPredictor Inner>
SubstituteRun train_substitute_jacobian(TargetOracle<Inner>& oracle, std::span<const Epoch> initial,
                                        const nn::ModelSpec& spec, const nn::TrainConfig& train_cfg,
                                        const JacobianConfig& cfg) {
    cfg.validate();
    spec.validate();
    train_cfg.validate();
    if (initial.empty()) throw InvalidArgument("jacobian training: empty initial set");
    detail::require_budget(oracle, cfg.planned_queries(initial.size()));

    const std::size_t start = oracle.query_count();
    const auto labels = oracle.query_labels(initial);
    LabeledSet data(std::vector<Epoch>(initial.begin(), initial.end()), labels);

    nn::Model model(spec);
    nn::train(model, data, detail::round_config(train_cfg, 0));

    AugmentationTrace trace;
    trace.iterations.push_back({0, oracle.query_count() - start, 0, data.size(), 0, data});

    Rng rng(cfg.seed);
    std::size_t added_total = 0;
    std::size_t substitute_queries = 0;
    for (std::size_t round = 1; round <= cfg.iterations; ++round) {
        std::size_t count = data.size();
        if (cfg.query_cap) count = std::min(count, *cfg.query_cap - added_total);
        if (count == 0) break;

        std::vector<Epoch> sources;
        if (count == data.size()) {
            sources = data.epochs();
        } else {
            std::vector<std::size_t> idx(data.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(count);
            std::sort(idx.begin(), idx.end());
            for (std::size_t i : idx) sources.push_back(data.epoch(i));
        }

        std::vector<Epoch> stepped = jacobian_augment(std::span<const Epoch>(sources), model, cfg.step);
        const auto new_labels = oracle.query_labels(stepped);
        LabeledSet added(std::move(stepped), new_labels);
        data.append(added);
        added_total += count;
        substitute_queries += count;
        detail::retrain(model, data, detail::round_config(train_cfg, round), cfg.retrain);

        trace.iterations.push_back(
            {round, oracle.query_count() - start, substitute_queries, data.size(), 0, std::move(added)});
    }
    return {std::move(model), std::move(trace), std::move(data)};
}

}  // namespace qsynth::synthesis
