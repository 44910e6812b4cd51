#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/nn/model.hpp"
#include "qsynth/nn/train.hpp"
#include "qsynth/oracle.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/synthesis/config.hpp"
#include "qsynth/synthesis/one_vs_one.hpp"
#include "qsynth/synthesis/trace.hpp"

namespace qsynth::synthesis {

/// A trained substitute together with how it got there.
struct SubstituteRun {
    nn::Model model;
    AugmentationTrace trace;
    LabeledSet data;  ///< final training set D
};

namespace detail {

inline nn::TrainConfig round_config(const nn::TrainConfig& base, std::size_t round) {
    nn::TrainConfig cfg = base;
    if (round > 0) cfg.shuffle_seed = derive_seed(base.shuffle_seed, round, "retrain");
    return cfg;
}

template <LabelPredictor Inner>
void require_budget(const TargetOracle<Inner>& oracle, std::size_t planned) {
    if (const auto left = oracle.remaining(); left && *left < planned) throw BudgetExhausted(planned, *left);
}

inline void retrain(nn::Model& model, const LabeledSet& data, const nn::TrainConfig& cfg, RetrainMode mode) {
    if (mode == RetrainMode::from_scratch) model.initialize();
    nn::train(model, data, cfg);
}

}  // namespace detail

/// Substitute training by query synthesis.
///
/// Labels `initial` on the oracle, pre-trains a fresh model of `spec`, then
/// for each of `cfg.max_iterations` rounds synthesizes `cfg.per_iteration`
/// epochs against the current substitute (binary, or one-vs-one when the
/// spec has three or more classes), labels them on the oracle, appends them
/// to the training set and retrains. The oracle is charged exactly
/// |initial| + max_iterations * per_iteration labels; the budget is checked
/// before the first query.
template <LabelPredictor Inner>
SubstituteRun train_substitute_active(TargetOracle<Inner>& oracle, std::span<const Epoch> initial,
                                      const nn::ModelSpec& spec, const nn::TrainConfig& train_cfg,
                                      const SynthesisConfig& cfg) {
    cfg.validate();
    spec.validate();
    train_cfg.validate();
    if (initial.empty()) throw InvalidArgument("active training: empty initial set");
    detail::require_budget(oracle, cfg.planned_queries(initial.size()));

    const std::size_t start = oracle.query_count();
    const auto labels = oracle.query_labels(initial);
    LabeledSet data(std::vector<Epoch>(initial.begin(), initial.end()), labels);

    nn::Model model(spec);
    nn::train(model, data, detail::round_config(train_cfg, 0));

    AugmentationTrace trace;
    trace.iterations.push_back({0, oracle.query_count() - start, 0, data.size(), 0, data});

    Rng rng(cfg.seed);
    std::size_t substitute_queries = 0;
    for (std::size_t round = 1; round <= cfg.max_iterations; ++round) {
        SynthesisStats stats;
        std::vector<Epoch> synthesized =
            spec.num_classes >= 3 ? synthesize_one_vs_one(data, model, spec.num_classes, cfg, rng, stats)
                                  : synthesize_binary(data, model, cfg, rng, stats);
        const auto new_labels = oracle.query_labels(synthesized);
        LabeledSet added(std::move(synthesized), new_labels);
        data.append(added);
        detail::retrain(model, data, detail::round_config(train_cfg, round), cfg.retrain);

        substitute_queries += stats.substitute_queries;
        trace.iterations.push_back({round, oracle.query_count() - start, substitute_queries, data.size(),
                                    stats.fallbacks, std::move(added)});
    }
    return {std::move(model), std::move(trace), std::move(data)};
}

}  // namespace qsynth::synthesis
