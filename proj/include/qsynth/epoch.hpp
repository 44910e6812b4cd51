#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qsynth/errors.hpp"
#include "qsynth/rng.hpp"

namespace qsynth {

/// Channels x time samples.
struct Shape {
    std::size_t channels = 0;
    std::size_t samples = 0;

    constexpr std::size_t size() const noexcept { return channels * samples; }
    friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(Shape s) {
    return std::to_string(s.channels) + "x" + std::to_string(s.samples);
}

using Label = int;

/// Label value meaning "not labeled" (stored in epoch files).
inline constexpr Label kUnlabeled = -1;

/// One multichannel signal segment, stored row-major [channel][time].
class Epoch {
public:
    Epoch() = default;

    explicit Epoch(Shape shape) : shape_(shape), values_(shape.size(), 0.0) {}

    Epoch(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
        if (values_.size() != shape_.size()) {
            throw ShapeMismatch("epoch of shape " + to_string(shape_) + " needs " +
                                std::to_string(shape_.size()) + " values, got " +
                                std::to_string(values_.size()));
        }
    }

    Shape shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    double at(std::size_t channel, std::size_t sample) const {
        return values_[channel * shape_.samples + sample];
    }
    double& at(std::size_t channel, std::size_t sample) {
        return values_[channel * shape_.samples + sample];
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    Epoch& operator+=(const Epoch& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    Epoch& operator-=(const Epoch& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    Epoch& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }

    friend Epoch operator+(Epoch a, const Epoch& b) { return a += b; }
    friend Epoch operator-(Epoch a, const Epoch& b) { return a -= b; }
    friend Epoch operator*(double s, Epoch a) { return a *= s; }
    friend Epoch operator*(Epoch a, double s) { return a *= s; }

    friend bool operator==(const Epoch&, const Epoch&) = default;

private:
    void require_same_shape(const Epoch& o) const {
        if (o.shape_ != shape_) {
            throw ShapeMismatch("epoch shapes differ: " + to_string(shape_) + " vs " +
                                to_string(o.shape_));
        }
    }

    Shape shape_;
    std::vector<double> values_;
};

inline double dot(const Epoch& a, const Epoch& b) {
    if (a.shape() != b.shape()) throw ShapeMismatch("dot: epoch shapes differ");
    const auto x = a.values();
    const auto y = b.values();
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

inline double norm2(const Epoch& a) { return std::sqrt(dot(a, a)); }

inline double max_abs(const Epoch& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

inline Epoch midpoint(const Epoch& a, const Epoch& b) {
    Epoch m = a + b;
    m *= 0.5;
    return m;
}

/// sign(0) == 0.
inline double sign(double v) noexcept { return static_cast<double>((v > 0.0) - (v < 0.0)); }

inline Epoch sign_of(const Epoch& a) {
    Epoch s(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) s[i] = sign(a[i]);
    return s;
}

inline Epoch standard_normal_epoch(Shape shape, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Epoch e(shape);
    for (double& v : e.values()) v = normal(rng);
    return e;
}

/// Epochs paired with integer class labels; all epochs share one shape.
class LabeledSet {
public:
    LabeledSet() = default;

    LabeledSet(std::vector<Epoch> epochs, std::vector<Label> labels)
        : epochs_(std::move(epochs)), labels_(std::move(labels)) {
        if (epochs_.size() != labels_.size()) {
            throw InvalidArgument("labeled set: " + std::to_string(epochs_.size()) + " epochs but " +
                                  std::to_string(labels_.size()) + " labels");
        }
        for (const Epoch& e : epochs_) {
            if (e.shape() != epochs_.front().shape()) {
                throw ShapeMismatch("labeled set: mixed epoch shapes");
            }
        }
    }

    void add(Epoch epoch, Label label) {
        if (!epochs_.empty() && epoch.shape() != shape()) {
            throw ShapeMismatch("labeled set: cannot add " + to_string(epoch.shape()) +
                                " epoch to a " + to_string(shape()) + " set");
        }
        epochs_.push_back(std::move(epoch));
        labels_.push_back(label);
    }

    void append(const LabeledSet& other) {
        for (std::size_t i = 0; i < other.size(); ++i) add(other.epochs_[i], other.labels_[i]);
    }

    std::size_t size() const noexcept { return epochs_.size(); }
    bool empty() const noexcept { return epochs_.empty(); }
    Shape shape() const { return epochs_.empty() ? Shape{} : epochs_.front().shape(); }

    const std::vector<Epoch>& epochs() const noexcept { return epochs_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }
    const Epoch& epoch(std::size_t i) const { return epochs_.at(i); }
    Label label(std::size_t i) const { return labels_.at(i); }

    /// Count per label, ordered by label.
    std::map<Label, std::size_t> class_counts() const {
        std::map<Label, std::size_t> counts;
        for (Label l : labels_) ++counts[l];
        return counts;
    }

    std::vector<std::size_t> indices_of(Label label) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i] == label) idx.push_back(i);
        }
        return idx;
    }

    friend bool operator==(const LabeledSet&, const LabeledSet&) = default;

private:
    std::vector<Epoch> epochs_;
    std::vector<Label> labels_;
};

}  // namespace qsynth
