#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/nn/model.hpp"
#include "qsynth/rng.hpp"

namespace qsynth::fixtures {

inline Epoch random_epoch(Shape shape, Rng& rng, double scale = 1.0) {
    Epoch e = standard_normal_epoch(shape, rng);
    e *= scale;
    return e;
}

/// Small random model of the given kind. Shapes, class count, widths and the
/// activation are drawn from `rng`.
inline nn::Model random_model(nn::Architecture arch, Rng& rng) {
    std::uniform_int_distribution<std::size_t> channels(1, 3);
    std::uniform_int_distribution<std::size_t> samples(8, 12);
    std::uniform_int_distribution<std::size_t> classes(2, 4);
    std::uniform_int_distribution<std::size_t> width(3, 8);
    std::bernoulli_distribution coin(0.5);

    nn::ModelSpec spec;
    spec.architecture = arch;
    spec.input = {channels(rng), samples(rng)};
    spec.num_classes = classes(rng);
    spec.activation = coin(rng) ? nn::Activation::relu : nn::Activation::tanh;
    spec.seed = rng();
    switch (arch) {
        case nn::Architecture::linear_softmax: spec.hidden.clear(); break;
        case nn::Architecture::mlp:
            spec.hidden = {width(rng)};
            if (coin(rng)) spec.hidden.push_back(width(rng));
            break;
        case nn::Architecture::temporal_conv:
            spec.hidden = {width(rng)};
            spec.kernel_width = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
            spec.pool_width = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
            break;
    }
    return nn::Model(spec);
}

/// Cross-entropy of class y, evaluated entirely in long double.
inline long double wide_loss(const nn::Model& model, std::span<const double> x, Label y) {
    const auto z = model.logits_as<long double>(x);
    const long double top = *std::max_element(z.begin(), z.end());
    long double s = 0.0L;
    for (long double v : z) s += std::exp(v - top);
    return top + std::log(s) - z[static_cast<std::size_t>(y)];
}

/// Central differences of the loss with respect to every input entry.
inline std::vector<long double> numeric_input_gradient(const nn::Model& model, const Epoch& x, Label y,
                                                       double step) {
    std::vector<double> probe(x.values().begin(), x.values().end());
    std::vector<long double> g(probe.size());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + step;
        const long double up = wide_loss(model, probe, y);
        probe[i] = orig - step;
        const long double down = wide_loss(model, probe, y);
        probe[i] = orig;
        g[i] = (up - down) / (2.0L * static_cast<long double>(step));
    }
    return g;
}

/// max_i |analytic_i - numeric_i| / max_i |numeric_i|.
inline double relative_error(const Epoch& analytic, const std::vector<long double>& numeric) {
    long double diff = 0.0L;
    long double scale = 0.0L;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        diff = std::max(diff, std::fabs(static_cast<long double>(analytic[i]) - numeric[i]));
        scale = std::max(scale, std::fabs(numeric[i]));
    }
    return static_cast<double>(diff / std::max(scale, 1e-300L));
}

/// True when the loss is smooth along every coordinate within `step` of x:
/// central differences at step and step/2 agree to `tolerance` relative.
/// ReLU kinks inside the stencil break this.
inline bool smooth_at(const nn::Model& model, const Epoch& x, Label y, double step, double tolerance = 1e-6) {
    const auto a = numeric_input_gradient(model, x, y, step);
    const auto b = numeric_input_gradient(model, x, y, step / 2.0);
    long double scale = 0.0L;
    long double diff = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max(scale, std::fabs(b[i]));
        diff = std::max(diff, std::fabs(a[i] - b[i]));
    }
    return diff <= tolerance * std::max(scale, 1e-300L);
}

/// Two-class linear substitute on a flat input: class 1 iff <w, x> + b > 0.
struct HalfSpace {
    Epoch w;
    double b = 0.0;

    Label predict(const Epoch& x) const { return dot(w, x) + b > 0.0 ? 1 : 0; }
    Shape input_shape() const { return w.shape(); }
};

}  // namespace qsynth::fixtures
