#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/oracle.hpp"

namespace qsynth::eval {

/// counts[truth][predicted].
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t num_classes = 0)
        : k_(num_classes), counts_(num_classes * num_classes, 0) {}

    void add(Label truth, Label predicted) {
        check(truth);
        check(predicted);
        ++counts_[static_cast<std::size_t>(truth) * k_ + static_cast<std::size_t>(predicted)];
    }

    std::size_t num_classes() const noexcept { return k_; }
    std::size_t operator()(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * k_ + predicted); }

    std::size_t support(std::size_t truth) const {
        std::size_t s = 0;
        for (std::size_t p = 0; p < k_; ++p) s += (*this)(truth, p);
        return s;
    }

    std::size_t total() const {
        std::size_t s = 0;
        for (auto c : counts_) s += c;
        return s;
    }

    std::size_t trace() const {
        std::size_t s = 0;
        for (std::size_t c = 0; c < k_; ++c) s += (*this)(c, c);
        return s;
    }

private:
    void check(Label y) const {
        if (y < 0 || static_cast<std::size_t>(y) >= k_) {
            throw InvalidArgument("confusion matrix: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(k_) + ")");
        }
    }

    std::size_t k_;
    std::vector<std::size_t> counts_;
};

/// RCA, BCA and their ingredients. Classes without support in the labels have
/// no recall and are left out of the BCA mean.
struct MetricReport {
    double rca = 0.0;
    double bca = 0.0;
    std::vector<std::optional<double>> recalls;
    ConfusionMatrix confusion;
};

namespace detail {

inline void check_lengths(std::span<const Label> predictions, std::span<const Label> labels) {
    if (predictions.size() != labels.size()) {
        throw InvalidArgument("metrics: " + std::to_string(predictions.size()) + " predictions for " +
                              std::to_string(labels.size()) + " labels");
    }
    if (labels.empty()) throw InvalidArgument("metrics: empty label vector");
}

inline std::size_t infer_classes(std::span<const Label> a, std::span<const Label> b) {
    Label top = 0;
    for (Label y : a) top = std::max(top, y);
    for (Label y : b) top = std::max(top, y);
    return static_cast<std::size_t>(top) + 1;
}

}  // namespace detail

/// Builds the report from the confusion matrix alone. `num_classes` of 0
/// means one more than the largest label seen.
inline MetricReport evaluate(std::span<const Label> predictions, std::span<const Label> labels,
                             std::size_t num_classes = 0) {
    detail::check_lengths(predictions, labels);
    if (num_classes == 0) num_classes = detail::infer_classes(predictions, labels);
    MetricReport r{0.0, 0.0, {}, ConfusionMatrix(num_classes)};
    for (std::size_t i = 0; i < labels.size(); ++i) r.confusion.add(labels[i], predictions[i]);

    r.rca = static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.total());
    double recall_sum = 0.0;
    std::size_t present = 0;
    r.recalls.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t s = r.confusion.support(c);
        if (s == 0) continue;
        r.recalls[c] = static_cast<double>(r.confusion(c, c)) / static_cast<double>(s);
        recall_sum += *r.recalls[c];
        ++present;
    }
    r.bca = recall_sum / static_cast<double>(present);
    return r;
}

/// Raw classification accuracy: fraction of matching entries.
inline double rca(std::span<const Label> predictions, std::span<const Label> labels) {
    detail::check_lengths(predictions, labels);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hit += predictions[i] == labels[i];
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

/// Balanced classification accuracy: mean recall over classes present in `labels`.
inline double bca(std::span<const Label> predictions, std::span<const Label> labels) {
    return evaluate(predictions, labels).bca;
}

template <LabelPredictor Classifier>
std::vector<Label> predict_all(const Classifier& model, std::span<const Epoch> epochs) {
    std::vector<Label> out;
    out.reserve(epochs.size());
    for (const Epoch& x : epochs) out.push_back(static_cast<Label>(model.predict(x)));
    return out;
}

/// Fraction of `epochs` on which `substitute` reproduces the target's labels.
template <LabelPredictor Classifier>
double boundary_agreement(const Classifier& substitute, std::span<const Label> target_labels,
                          std::span<const Epoch> epochs) {
    if (epochs.empty()) throw InvalidArgument("boundary agreement: empty test set");
    if (epochs.size() != target_labels.size()) throw InvalidArgument("boundary agreement: length mismatch");
    const auto preds = predict_all(substitute, epochs);
    return rca(preds, target_labels);
}

}  // namespace qsynth::eval
