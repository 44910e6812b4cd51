#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "qsynth/epoch.hpp"

namespace qsynth::synthesis {

/// State after one augmentation round. Round 0 is the initial labeling and
/// pre-training; query counts are cumulative from the start of training.
struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t target_queries = 0;
    std::size_t substitute_queries = 0;
    std::size_t train_set_size = 0;
    std::size_t fallbacks = 0;  ///< random epochs labeled because no pair bracketed the boundary
    LabeledSet added;           ///< synthesized epochs with their target labels
};

struct AugmentationTrace {
    std::vector<IterationRecord> iterations;

    std::size_t target_queries() const { return iterations.empty() ? 0 : iterations.back().target_queries; }

    /// CSV with header `iteration,target_queries,substitute_queries,train_set_size`.
    /// `query_offset` is added to every target_queries value.
    void write_csv(std::ostream& out, std::size_t query_offset = 0) const {
        out << "iteration,target_queries,substitute_queries,train_set_size\n";
        for (const auto& r : iterations) {
            out << r.iteration << ',' << r.target_queries + query_offset << ',' << r.substitute_queries << ','
                << r.train_set_size << '\n';
        }
    }
};

}  // namespace qsynth::synthesis
