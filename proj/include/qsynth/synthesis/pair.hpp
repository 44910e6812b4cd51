#pragma once

#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/rng.hpp"

namespace qsynth::synthesis {

/// Two epochs on opposite sides of a decision boundary.
struct OppositePair {
    Epoch positive;
    Epoch negative;
    Label positive_label = 1;
    Label negative_label = 0;

    void validate() const {
        if (positive.shape() != negative.shape()) throw ShapeMismatch("opposite pair: endpoint shapes differ");
        if (positive_label == negative_label) throw InvalidArgument("opposite pair: labels must differ");
    }
};

/// Uniformly random member of each class of `data`.
///
/// With `classes = (a, b)` the positive endpoint comes from class a and the
/// negative from class b. Without it `data` must carry exactly two distinct
/// labels; the larger one is positive.
inline OppositePair select_opposite_pair(const LabeledSet& data, Rng& rng,
                                         std::optional<std::pair<Label, Label>> classes = std::nullopt) {
    Label a;
    Label b;
    if (classes) {
        std::tie(a, b) = *classes;
        if (a == b) throw InvalidArgument("select_opposite_pair: class pair must name two classes");
    } else {
        std::set<Label> present(data.labels().begin(), data.labels().end());
        present.erase(kUnlabeled);
        if (present.size() < 2) throw NoOppositePair("data holds fewer than two classes");
        if (present.size() > 2) {
            throw InvalidArgument("select_opposite_pair: more than two classes present; name a class pair");
        }
        b = *present.begin();
        a = *present.rbegin();
    }
    const auto pos = data.indices_of(a);
    const auto neg = data.indices_of(b);
    if (pos.empty() || neg.empty()) {
        throw NoOppositePair("class " + std::to_string(pos.empty() ? a : b) + " is absent from the data");
    }
    std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);
    const std::size_t i = pos[pick_pos(rng)];
    const std::size_t j = neg[pick_neg(rng)];
    return {data.epoch(i), data.epoch(j), a, b};
}

}  // namespace qsynth::synthesis
