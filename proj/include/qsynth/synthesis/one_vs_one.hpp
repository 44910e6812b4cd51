#pragma once

#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/oracle.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/synthesis/boundary_search.hpp"
#include "qsynth/synthesis/config.hpp"
#include "qsynth/synthesis/pair.hpp"

namespace qsynth::synthesis {

struct SynthesisStats {
    std::size_t substitute_queries = 0;
    std::size_t fallbacks = 0;
};

/// Synthesizes one epoch near the substitute boundary between classes a and b
/// of `data`: draw an opposite pair, bisect it, then offset perpendicularly
/// from a further-bisected midpoint (2m substitute queries). Pairs that the
/// substitute puts on one side are redrawn up to `reselect_limit` times; after
/// that a standard-normal epoch is returned when `random_fallback` is set.
template <LabelPredictor Substitute>
Epoch synthesize_epoch(const LabeledSet& data, const Substitute& substitute, Label a, Label b,
                       const SynthesisConfig& cfg, Rng& rng, SynthesisStats& stats) {
    for (std::size_t attempt = 0; attempt <= cfg.reselect_limit; ++attempt) {
        OppositePair pair = select_opposite_pair(data, rng, std::pair{a, b});
        if (substitute.predict(pair.positive) == substitute.predict(pair.negative)) continue;
        SearchResult first = binary_search_pair(pair, substitute, cfg.search_steps);
        auto perp = mid_perpendicular(first.pair, substitute, cfg.search_steps, cfg.offset_norm, rng,
                                      cfg.resample_limit);
        stats.substitute_queries += first.queries + perp.queries;
        return std::move(perp.synthesized);
    }
    if (!cfg.random_fallback) {
        throw NoOppositePair("substitute places every drawn pair of classes " + std::to_string(a) + "/" +
                             std::to_string(b) + " on one side");
    }
    ++stats.fallbacks;
    return standard_normal_epoch(data.shape(), rng);
}

/// All k(k-1)/2 class pairs (a, b), a < b, in lexicographic order.
inline std::vector<std::pair<Label, Label>> class_pairs(std::size_t num_classes) {
    std::vector<std::pair<Label, Label>> pairs;
    for (std::size_t a = 0; a < num_classes; ++a) {
        for (std::size_t b = a + 1; b < num_classes; ++b) {
            pairs.emplace_back(static_cast<Label>(a), static_cast<Label>(b));
        }
    }
    return pairs;
}

struct PairQuota {
    Label first;
    Label second;
    std::size_t count;
};

/// Per-pair synthesis counts for one round.
///
/// Each of the k2 pairs starts with floor(total / k2); the remainder goes one
/// each to the leading pairs. Pairs with a class absent from `present` are
/// dropped and their counts are dealt round-robin, one at a time, to the
/// remaining pairs in canonical order. Returns only realizable pairs; their
/// counts sum to `total` whenever at least one pair is realizable.
inline std::vector<PairQuota> one_vs_one_quotas(std::size_t num_classes, const std::set<Label>& present,
                                                std::size_t total) {
    const auto pairs = class_pairs(num_classes);
    const std::size_t k2 = pairs.size();
    std::vector<PairQuota> realizable;
    std::size_t orphaned = 0;
    for (std::size_t i = 0; i < k2; ++i) {
        const std::size_t quota = total / k2 + (i < total % k2 ? 1 : 0);
        const auto [a, b] = pairs[i];
        if (present.contains(a) && present.contains(b)) {
            realizable.push_back({a, b, quota});
        } else {
            orphaned += quota;
        }
    }
    for (std::size_t i = 0; orphaned > 0 && !realizable.empty(); i = (i + 1) % realizable.size()) {
        ++realizable[i].count;
        --orphaned;
    }
    return realizable;
}

inline std::set<Label> labels_present(const LabeledSet& data) {
    std::set<Label> present(data.labels().begin(), data.labels().end());
    present.erase(kUnlabeled);
    return present;
}

/// One round of one-vs-one synthesis for a k-class substitute (k >= 3);
/// returns exactly `cfg.per_iteration` epochs grouped by class pair.
template <LabelPredictor Substitute>
std::vector<Epoch> synthesize_one_vs_one(const LabeledSet& data, const Substitute& substitute,
                                         std::size_t num_classes, const SynthesisConfig& cfg, Rng& rng,
                                         SynthesisStats& stats) {
    if (num_classes < 3) throw InvalidArgument("one-vs-one synthesis needs at least 3 classes");
    const auto quotas = one_vs_one_quotas(num_classes, labels_present(data), cfg.per_iteration);
    std::vector<Epoch> out;
    out.reserve(cfg.per_iteration);
    if (quotas.empty()) {
        if (!cfg.random_fallback) throw NoOppositePair("data holds fewer than two classes");
        for (std::size_t i = 0; i < cfg.per_iteration; ++i) {
            out.push_back(standard_normal_epoch(data.shape(), rng));
            ++stats.fallbacks;
        }
        return out;
    }
    for (const auto& q : quotas) {
        for (std::size_t i = 0; i < q.count; ++i) {
            out.push_back(synthesize_epoch(data, substitute, q.first, q.second, cfg, rng, stats));
        }
    }
    return out;
}

template <LabelPredictor Substitute>
std::vector<Epoch> synthesize_one_vs_one(const LabeledSet& data, const Substitute& substitute,
                                         std::size_t num_classes, const SynthesisConfig& cfg, Rng& rng) {
    SynthesisStats stats;
    return synthesize_one_vs_one(data, substitute, num_classes, cfg, rng, stats);
}

/// One round of binary synthesis: `cfg.per_iteration` epochs between the two
/// classes present in `data` (larger label positive).
template <LabelPredictor Substitute>
std::vector<Epoch> synthesize_binary(const LabeledSet& data, const Substitute& substitute,
                                     const SynthesisConfig& cfg, Rng& rng, SynthesisStats& stats) {
    const auto present = labels_present(data);
    if (present.size() > 2) throw InvalidArgument("binary synthesis: more than two classes present");
    std::vector<Epoch> out;
    out.reserve(cfg.per_iteration);
    for (std::size_t i = 0; i < cfg.per_iteration; ++i) {
        if (present.size() < 2) {
            if (!cfg.random_fallback) throw NoOppositePair("data holds fewer than two classes");
            ++stats.fallbacks;
            out.push_back(standard_normal_epoch(data.shape(), rng));
            continue;
        }
        out.push_back(synthesize_epoch(data, substitute, *present.rbegin(), *present.begin(), cfg, rng, stats));
    }
    return out;
}

}  // namespace qsynth::synthesis
