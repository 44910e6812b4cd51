#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "qsynth/errors.hpp"

namespace qsynth::synthesis {

/// How the substitute is refit after each augmentation round.
enum class RetrainMode { fine_tune, from_scratch };

inline std::string_view to_string(RetrainMode m) {
    return m == RetrainMode::fine_tune ? "fine_tune" : "from_scratch";
}

inline RetrainMode parse_retrain_mode(std::string_view s) {
    if (s == "fine_tune") return RetrainMode::fine_tune;
    if (s == "from_scratch") return RetrainMode::from_scratch;
    throw InvalidArgument("unknown retrain mode '" + std::string(s) + "'");
}

/// Query-synthesis settings.
struct SynthesisConfig {
    std::size_t max_iterations = 2;        ///< outer rounds (N_max)
    std::size_t per_iteration = 200;       ///< synthesized epochs per round (n_max)
    std::size_t search_steps = 10;         ///< bisection steps (m)
    double offset_norm = 1.0;              ///< L2 norm of the perpendicular offset (q)
    std::uint64_t seed = 0;
    RetrainMode retrain = RetrainMode::fine_tune;
    std::size_t resample_limit = 16;       ///< extra random draws for a degenerate direction
    std::size_t reselect_limit = 32;       ///< extra pair draws when the substitute sees no boundary
    bool random_fallback = true;           ///< label a random-normal epoch when no pair brackets

    void validate() const {
        if (max_iterations < 1) throw InvalidArgument("synthesis: max_iterations must be >= 1");
        if (per_iteration < 1) throw InvalidArgument("synthesis: per_iteration must be >= 1");
        if (search_steps < 1) throw InvalidArgument("synthesis: search_steps must be >= 1");
        if (!(offset_norm > 0.0)) throw InvalidArgument("synthesis: offset_norm must be > 0");
    }

    std::size_t planned_queries(std::size_t initial) const { return initial + max_iterations * per_iteration; }
};

/// Jacobian-based augmentation baseline settings.
///
/// Without a cap every round steps once from each labeled epoch, doubling the
/// set. With `query_cap`, the round that would overrun it steps only from a
/// seeded random subset so the total number of new labels equals the cap.
struct JacobianConfig {
    std::size_t iterations = 1;
    double step = 0.5;  ///< lambda
    std::optional<std::size_t> query_cap;
    std::uint64_t seed = 0;
    RetrainMode retrain = RetrainMode::fine_tune;

    void validate() const {
        if (iterations < 1) throw InvalidArgument("jacobian: iterations must be >= 1");
        if (!(step > 0.0)) throw InvalidArgument("jacobian: step must be > 0");
    }

    std::size_t planned_queries(std::size_t initial) const {
        std::size_t set = initial;
        std::size_t added = 0;
        for (std::size_t i = 0; i < iterations; ++i) {
            std::size_t n = set;
            if (query_cap) n = std::min(n, *query_cap - added);
            added += n;
            set += n;
        }
        return initial + added;
    }
};

}  // namespace qsynth::synthesis
