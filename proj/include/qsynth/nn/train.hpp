#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/nn/model.hpp"
#include "qsynth/rng.hpp"

namespace qsynth::nn {

enum class ClassWeighting { uniform, inverse_frequency };

inline std::string_view to_string(ClassWeighting w) {
    return w == ClassWeighting::uniform ? "uniform" : "inverse_frequency";
}

inline ClassWeighting parse_class_weighting(std::string_view s) {
    if (s == "uniform") return ClassWeighting::uniform;
    if (s == "inverse_frequency") return ClassWeighting::inverse_frequency;
    throw InvalidArgument("unknown class weighting '" + std::string(s) + "'");
}

struct TrainConfig {
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    double validation_fraction = 0.2;
    ClassWeighting class_weighting = ClassWeighting::uniform;
    std::size_t batch_size = 32;
    std::uint64_t shuffle_seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw InvalidArgument("train config: learning rate must be > 0");
        if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
            throw InvalidArgument("train config: validation fraction must lie in (0, 1)");
        }
        if (patience < 1) throw InvalidArgument("train config: patience must be >= 1");
        if (max_epochs < 1) throw InvalidArgument("train config: max epochs must be >= 1");
        if (batch_size < 1) throw InvalidArgument("train config: batch size must be >= 1");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
            throw InvalidArgument("train config: Adam betas must lie in [0, 1)");
        }
        if (!(adam_epsilon > 0.0)) throw InvalidArgument("train config: Adam epsilon must be > 0");
    }
};

/// Per-epoch losses. Epoch e (1-based) is stored at index e - 1.
struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::size_t best_epoch = 0;
    double best_validation_loss = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
};

/// Per-class loss weights. Inverse-frequency weights are normalized to mean 1
/// over the classes present; absent classes get weight 0.
inline std::vector<double> class_weights(std::span<const Label> labels, std::size_t num_classes,
                                         ClassWeighting mode) {
    std::vector<double> w(num_classes, 1.0);
    if (mode == ClassWeighting::uniform) return w;

    std::vector<std::size_t> counts(num_classes, 0);
    for (Label l : labels) ++counts.at(static_cast<std::size_t>(l));
    std::size_t present = 0;
    double total = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (counts[c] > 0) {
            w[c] = 1.0 / static_cast<double>(counts[c]);
            total += w[c];
            ++present;
        } else {
            w[c] = 0.0;
        }
    }
    if (present < 2) {
        throw InvalidArgument("inverse-frequency class weights need at least two represented classes");
    }
    const double scale = static_cast<double>(present) / total;
    for (double& v : w) v *= scale;
    return w;
}

inline void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
                      const TrainConfig& cfg) {
    if (state.first.size() != params.size()) {
        state.first.assign(params.size(), 0.0);
        state.second.assign(params.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.first[i] = cfg.beta1 * state.first[i] + (1.0 - cfg.beta1) * grad[i];
        state.second[i] = cfg.beta2 * state.second[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = state.first[i] / c1;
        const double vhat = state.second[i] / c2;
        params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
}

/// Mean class-weighted cross-entropy over the selected examples.
inline double mean_loss(const Model& model, const LabeledSet& data, std::span<const std::size_t> idx,
                        std::span<const double> weights) {
    if (idx.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i : idx) {
        const auto y = data.label(i);
        total += model.loss(data.epoch(i), y, weights[static_cast<std::size_t>(y)]);
    }
    return total / static_cast<double>(idx.size());
}

/// Mini-batch Adam on class-weighted cross-entropy with early stopping.
///
/// A `validation_fraction` share of the data (at least one example, at most
/// n - 1) is held out after a seeded shuffle; a single example validates on
/// itself. Training stops after `patience` epochs without a strict
/// improvement of validation loss, and the model is left holding the
/// parameters of the best validation epoch. Optimizer moments persist in the
/// model, so a second call fine-tunes.
inline TrainHistory train(Model& model, const LabeledSet& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw InvalidArgument("train: empty data set");
    for (Label y : data.labels()) {
        if (y < 0 || static_cast<std::size_t>(y) >= model.num_classes()) {
            throw InvalidArgument("train: label " + std::to_string(y) + " outside the model's classes");
        }
    }
    if (data.shape() != model.input_shape()) {
        throw ShapeMismatch("train: data shape " + to_string(data.shape()) + " does not match model " +
                            to_string(model.input_shape()));
    }
    const auto weights = class_weights(data.labels(), model.num_classes(), cfg.class_weighting);

    Rng rng(cfg.shuffle_seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;
    if (data.size() == 1) {
        train_idx = order;
        val_idx = order;
    } else {
        auto n_val = static_cast<std::size_t>(
            std::lround(cfg.validation_fraction * static_cast<double>(data.size())));
        n_val = std::clamp<std::size_t>(n_val, 1, data.size() - 1);
        val_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
        train_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    }

    TrainHistory history;
    std::vector<double> best(model.parameters().begin(), model.parameters().end());
    std::vector<double> grad(model.parameter_count());
    std::size_t stale = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(train_idx.size(), start + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t i = train_idx[k];
                const auto y = data.label(i);
                epoch_loss += model.accumulate_parameter_gradient(
                    data.epoch(i), y, weights[static_cast<std::size_t>(y)], grad);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : grad) g *= inv;
            adam_step(model.parameters(), grad, model.optimizer_state(), cfg);
        }
        history.train_loss.push_back(epoch_loss / static_cast<double>(train_idx.size()));

        const double val = mean_loss(model, data, val_idx, weights);
        history.validation_loss.push_back(val);
        if (val < history.best_validation_loss) {
            history.best_validation_loss = val;
            history.best_epoch = epoch;
            std::copy(model.parameters().begin(), model.parameters().end(), best.begin());
            stale = 0;
        } else if (++stale >= cfg.patience) {
            history.stopped_early = true;
            break;
        }
    }
    std::copy(best.begin(), best.end(), model.parameters().begin());
    return history;
}

/// Fraction of `data` whose label `model` predicts.
inline double accuracy(const Model& model, const LabeledSet& data) {
    if (data.empty()) throw InvalidArgument("accuracy: empty data set");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < data.size(); ++i) hit += model.predict(data.epoch(i)) == data.label(i);
    return static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace qsynth::nn
