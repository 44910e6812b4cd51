#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/rng.hpp"

namespace qsynth::data {

/// Generated values are rounded to binary32 so sets survive the epoch file
/// format unchanged.
inline double storable(double v) { return static_cast<double>(static_cast<float>(v)); }

/// Isotropic Gaussian clusters, class-major order.
///
/// Class means are `separation / sqrt(2)` times mutually orthonormal random
/// directions (pairwise distance exactly `separation`) when k <= C*T, and
/// random unit directions otherwise.
inline LabeledSet gen_blobs(std::size_t per_class, std::size_t num_classes, Shape shape, double separation,
                            double sigma, std::uint64_t seed) {
    if (per_class < 1) throw InvalidArgument("gen_blobs: need at least one epoch per class");
    if (num_classes < 2) throw InvalidArgument("gen_blobs: need at least two classes");
    if (!(separation > 0.0)) throw InvalidArgument("gen_blobs: separation must be > 0");
    if (!(sigma >= 0.0)) throw InvalidArgument("gen_blobs: sigma must be >= 0");
    if (shape.size() == 0) throw InvalidArgument("gen_blobs: empty epoch shape");

    Rng rng(seed);
    std::vector<Epoch> means;
    for (std::size_t c = 0; c < num_classes; ++c) {
        Epoch u = standard_normal_epoch(shape, rng);
        if (num_classes <= shape.size()) {
            for (const Epoch& prev : means) u -= dot(u, prev) * prev;
        }
        u *= 1.0 / norm2(u);
        means.push_back(std::move(u));
    }
    for (Epoch& m : means) m *= separation / std::sqrt(2.0);

    std::normal_distribution<double> noise(0.0, 1.0);
    LabeledSet out;
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            Epoch e(shape);
            for (std::size_t j = 0; j < e.size(); ++j) e[j] = storable(means[c][j] + sigma * noise(rng));
            out.add(std::move(e), static_cast<Label>(c));
        }
    }
    return out;
}

/// Noise-free class template of the ERP-like generator, RMS exactly 1.
///
/// Every class shares a slow background rhythm and a per-channel spatial
/// gain; classes differ in the latency and width of a windowed bump and in
/// the frequency of a smaller oscillation riding on it.
inline Epoch erp_template(std::size_t cls, std::size_t num_classes, Shape shape, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0, "erp-gains"));
    std::uniform_real_distribution<double> gain(0.5, 1.5);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<double> gains(shape.channels);
    std::vector<double> phases(shape.channels);
    for (std::size_t ch = 0; ch < shape.channels; ++ch) {
        gains[ch] = gain(rng);
        phases[ch] = phase(rng);
    }

    const double frac = num_classes > 1 ? static_cast<double>(cls) / static_cast<double>(num_classes - 1) : 0.0;
    const double latency = 0.3 + 0.35 * frac;
    const double width = 0.08 + 0.04 * frac;
    const double freq = 3.0 + 2.0 * static_cast<double>(cls);
    Epoch t(shape);
    for (std::size_t ch = 0; ch < shape.channels; ++ch) {
        for (std::size_t s = 0; s < shape.samples; ++s) {
            const double u = shape.samples > 1 ? static_cast<double>(s) / static_cast<double>(shape.samples - 1) : 0.0;
            const double bump = std::exp(-(u - latency) * (u - latency) / (2.0 * width * width));
            const double background = std::sin(2.0 * std::numbers::pi * 1.5 * u + phases[ch]);
            const double ripple = 0.4 * std::sin(2.0 * std::numbers::pi * freq * u) * bump;
            t.at(ch, s) = gains[ch] * (1.5 * bump + ripple) + 0.8 * background;
        }
    }
    t *= std::sqrt(static_cast<double>(t.size())) / norm2(t);
    return t;
}

/// ERP-like epochs: class template scaled to RMS 1/sqrt(1 + r^2) plus white
/// noise of standard deviation r/sqrt(1 + r^2), r = `noise_ratio`, so the
/// expected power per sample is 1. Class-major order.
inline LabeledSet gen_synthetic_epochs(std::size_t per_class, std::size_t num_classes, std::size_t channels,
                                       std::size_t samples, std::uint64_t seed, double noise_ratio = 1.0) {
    if (per_class < 1) throw InvalidArgument("gen_synthetic_epochs: need at least one epoch per class");
    if (num_classes < 2) throw InvalidArgument("gen_synthetic_epochs: need at least two classes");
    if (channels < 1 || samples < 8) throw InvalidArgument("gen_synthetic_epochs: need C >= 1 and T >= 8");
    if (!(noise_ratio >= 0.0)) throw InvalidArgument("gen_synthetic_epochs: noise ratio must be >= 0");

    const Shape shape{channels, samples};
    const double signal = 1.0 / std::sqrt(1.0 + noise_ratio * noise_ratio);
    const double sigma = noise_ratio * signal;
    Rng rng(derive_seed(seed, 0, "erp-noise"));
    std::normal_distribution<double> noise(0.0, 1.0);
    LabeledSet out;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const Epoch tmpl = signal * erp_template(c, num_classes, shape, seed);
        for (std::size_t i = 0; i < per_class; ++i) {
            Epoch e(shape);
            for (std::size_t j = 0; j < e.size(); ++j) e[j] = storable(tmpl[j] + sigma * noise(rng));
            out.add(std::move(e), static_cast<Label>(c));
        }
    }
    return out;
}

/// Root mean square over every value of every epoch.
inline double rms(const LabeledSet& data) {
    double total = 0.0;
    std::size_t n = 0;
    for (const Epoch& e : data.epochs()) {
        total += dot(e, e);
        n += e.size();
    }
    return n == 0 ? 0.0 : std::sqrt(total / static_cast<double>(n));
}

/// Per-channel mean and standard deviation over a whole set.
struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

inline ChannelStats fit_zscore(const LabeledSet& data) {
    const Shape shape = data.shape();
    ChannelStats st{std::vector<double>(shape.channels, 0.0), std::vector<double>(shape.channels, 0.0)};
    if (data.empty()) return st;
    const double n = static_cast<double>(data.size() * shape.samples);
    for (const Epoch& e : data.epochs()) {
        for (std::size_t c = 0; c < shape.channels; ++c) {
            for (std::size_t s = 0; s < shape.samples; ++s) st.mean[c] += e.at(c, s);
        }
    }
    for (double& m : st.mean) m /= n;
    for (const Epoch& e : data.epochs()) {
        for (std::size_t c = 0; c < shape.channels; ++c) {
            for (std::size_t s = 0; s < shape.samples; ++s) {
                const double d = e.at(c, s) - st.mean[c];
                st.stddev[c] += d * d;
            }
        }
    }
    for (double& s : st.stddev) s = std::sqrt(s / n);
    return st;
}

/// Standardizes each channel with `stats`; channels with zero spread are only centred.
inline LabeledSet apply_zscore(const LabeledSet& data, const ChannelStats& stats) {
    LabeledSet out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Epoch e = data.epoch(i);
        for (std::size_t c = 0; c < e.shape().channels; ++c) {
            const double scale = stats.stddev[c] > 0.0 ? 1.0 / stats.stddev[c] : 1.0;
            for (std::size_t s = 0; s < e.shape().samples; ++s) e.at(c, s) = (e.at(c, s) - stats.mean[c]) * scale;
        }
        out.add(std::move(e), data.label(i));
    }
    return out;
}

}  // namespace qsynth::data
