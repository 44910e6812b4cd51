#pragma once

#include <cmath>
#include <cstddef>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/oracle.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/synthesis/pair.hpp"

namespace qsynth::synthesis {

/// Norm below which an orthogonalized draw counts as degenerate.
inline constexpr double kDegenerateNorm = 1e-8;

struct SearchResult {
    OppositePair pair;
    std::size_t queries = 0;  ///< midpoint queries issued to the substitute
};

/// Bisection along the segment between the endpoints of `pair`.
///
/// The endpoints are first classified by `substitute`; they must disagree.
/// Each of the `steps` iterations queries the midpoint and replaces the
/// endpoint whose substitute label it shares (the positive side keeps the
/// positive endpoint's label, everything else is negative). The returned
/// pair carries the substitute labels of the original endpoints and its
/// endpoints are 2^-steps times closer. The two endpoint checks are not
/// counted in `queries`.
template <LabelPredictor Substitute>
SearchResult binary_search_pair(const OppositePair& pair, const Substitute& substitute, std::size_t steps) {
    if (pair.positive.shape() != pair.negative.shape()) {
        throw ShapeMismatch("binary search: endpoint shapes differ");
    }
    const Label pos = substitute.predict(pair.positive);
    const Label neg = substitute.predict(pair.negative);
    if (pos == neg) {
        throw BoundaryLost("binary search: both endpoints classified as " + std::to_string(pos));
    }
    SearchResult result{{pair.positive, pair.negative, pos, neg}, 0};
    for (std::size_t i = 0; i < steps; ++i) {
        Epoch mid = midpoint(result.pair.positive, result.pair.negative);
        ++result.queries;
        if (substitute.predict(mid) == pos) {
            result.pair.positive = std::move(mid);
        } else {
            result.pair.negative = std::move(mid);
        }
    }
    return result;
}

/// Gram-Schmidt step: the component of `draw` orthogonal to `direction`,
/// rescaled to L2 norm `magnitude`. Throws DegenerateDirection when that
/// component is shorter than kDegenerateNorm.
inline Epoch orthogonal_offset(const Epoch& direction, const Epoch& draw, double magnitude) {
    const double dd = dot(direction, direction);
    if (!(dd > 0.0)) throw DegenerateDirection("orthogonal offset: zero direction");
    Epoch v = draw - (dot(direction, draw) / dd) * direction;
    const double n = norm2(v);
    if (!(n >= kDegenerateNorm)) throw DegenerateDirection("orthogonal offset: draw parallel to direction");
    v *= magnitude / n;
    return v;
}

/// Standard-normal draws orthogonalized against `direction`; up to
/// `resample_limit` redraws after a degenerate one.
inline Epoch random_orthogonal_offset(const Epoch& direction, double magnitude, Rng& rng,
                                      std::size_t resample_limit) {
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            return orthogonal_offset(direction, standard_normal_epoch(direction.shape(), rng), magnitude);
        } catch (const DegenerateDirection&) {
            if (attempt >= resample_limit) throw;
        }
    }
}

struct MidPerpendicularResult {
    Epoch synthesized;
    Epoch offset;          ///< perpendicular component, norm == magnitude
    OppositePair refined;  ///< pair after the internal bisection
    std::size_t queries = 0;
};

/// Perpendicular-bisector synthesis.
///
/// Draws a random epoch, removes its component along the pair's difference
/// vector, scales it to `magnitude`, bisects the pair a further `steps` times
/// on the substitute, and offsets the refined midpoint by the result.
template <LabelPredictor Substitute>
MidPerpendicularResult mid_perpendicular(const OppositePair& pair, const Substitute& substitute,
                                         std::size_t steps, double magnitude, Rng& rng,
                                         std::size_t resample_limit = 16) {
    if (!(magnitude > 0.0)) throw InvalidArgument("mid-perpendicular: magnitude must be > 0");
    const Epoch direction = pair.positive - pair.negative;
    Epoch offset = random_orthogonal_offset(direction, magnitude, rng, resample_limit);
    SearchResult refined = binary_search_pair(pair, substitute, steps);
    Epoch synthesized = midpoint(refined.pair.positive, refined.pair.negative) + offset;
    return {std::move(synthesized), std::move(offset), std::move(refined.pair), refined.queries};
}

}  // namespace qsynth::synthesis
