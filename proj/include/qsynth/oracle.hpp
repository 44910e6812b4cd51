#pragma once

#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"

namespace qsynth {

template <class C>
concept LabelPredictor = requires(const C& c, const Epoch& x) {
    { c.predict(x) } -> std::convertible_to<Label>;
};

template <class C>
concept DifferentiableClassifier = LabelPredictor<C> && requires(const C& c, const Epoch& x, Label y) {
    { c.input_gradient(x, y) } -> std::convertible_to<Epoch>;
    { c.input_shape() } -> std::convertible_to<Shape>;
};

/// Label-only view of a classifier that counts every labeled epoch.
///
/// The inner model is held privately; only predicted labels leave. A call
/// either labels its whole batch or, when the optional budget would be
/// exceeded or an epoch has the wrong shape, labels nothing and leaves the
/// counter untouched.
template <LabelPredictor Inner>
class TargetOracle {
public:
    TargetOracle(Inner inner, Shape input_shape, std::optional<std::size_t> budget = std::nullopt)
        : inner_(std::move(inner)), shape_(input_shape), budget_(budget) {
        if (budget_ && *budget_ == 0) throw InvalidArgument("oracle budget must be positive");
    }

    std::vector<Label> query_labels(std::span<const Epoch> xs) {
        for (const Epoch& x : xs) {
            if (x.shape() != shape_) {
                throw ShapeMismatch("oracle expects " + to_string(shape_) + " epochs, got " +
                                    to_string(x.shape()));
            }
        }
        if (budget_ && xs.size() > *budget_ - count_) throw BudgetExhausted(xs.size(), *budget_ - count_);
        std::vector<Label> labels;
        labels.reserve(xs.size());
        for (const Epoch& x : xs) labels.push_back(static_cast<Label>(inner_.predict(x)));
        count_ += xs.size();
        return labels;
    }

    Label query_label(const Epoch& x) { return query_labels(std::span<const Epoch>(&x, 1)).front(); }

    std::size_t query_count() const noexcept { return count_; }
    Shape input_shape() const noexcept { return shape_; }
    std::optional<std::size_t> budget() const noexcept { return budget_; }

    /// Labels still allowed, or nullopt when unbounded.
    std::optional<std::size_t> remaining() const noexcept {
        if (!budget_) return std::nullopt;
        return *budget_ - count_;
    }

private:
    Inner inner_;
    Shape shape_;
    std::optional<std::size_t> budget_;
    std::size_t count_ = 0;
};

}  // namespace qsynth
