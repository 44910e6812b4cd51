#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/oracle.hpp"
#include "qsynth/rng.hpp"

namespace qsynth::data {

/// Class-balanced subsample of `pool` by the labels the oracle predicts.
///
/// Every pool epoch is labeled once (|pool| queries). For each class
/// 0..num_classes-1, `per_class` members are drawn uniformly without
/// replacement; output is grouped by class. In strict mode a class with
/// fewer members is an error, otherwise all of its members are taken.
template <LabelPredictor Inner>
std::vector<Epoch> balance_by_predicted_label(TargetOracle<Inner>& oracle, std::span<const Epoch> pool,
                                              std::size_t per_class, std::size_t num_classes,
                                              std::uint64_t seed, bool strict = true) {
    if (per_class < 1) throw InvalidArgument("balance: per_class must be >= 1");
    const auto labels = oracle.query_labels(pool);
    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto y = labels[i];
        if (y >= 0 && static_cast<std::size_t>(y) < num_classes) members[static_cast<std::size_t>(y)].push_back(i);
    }
    Rng rng(seed);
    std::vector<Epoch> out;
    for (std::size_t c = 0; c < num_classes; ++c) {
        auto& idx = members[c];
        if (strict && idx.size() < per_class) {
            throw InvalidArgument("balance: predicted class " + std::to_string(c) + " has " +
                                  std::to_string(idx.size()) + " members, need " + std::to_string(per_class));
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t take = std::min(per_class, idx.size());
        for (std::size_t k = 0; k < take; ++k) out.push_back(pool[idx[k]]);
    }
    return out;
}

}  // namespace qsynth::data
