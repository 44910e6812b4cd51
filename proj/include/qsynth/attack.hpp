#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/oracle.hpp"
#include "qsynth/rng.hpp"

namespace qsynth::attack {

enum class Method { fgsm, ufgsm, noise };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::fgsm: return "fgsm";
        case Method::ufgsm: return "ufgsm";
        case Method::noise: return "noise";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    if (s == "fgsm") return Method::fgsm;
    if (s == "ufgsm") return Method::ufgsm;
    if (s == "noise") return Method::noise;
    throw InvalidArgument("unknown attack method '" + std::string(s) + "'");
}

struct AttackConfig {
    double epsilon = 0.1;
    Method method = Method::ufgsm;
    std::uint64_t noise_seed = 0;

    void validate() const {
        if (!(epsilon >= 0.0)) throw InvalidArgument("attack: epsilon must be >= 0");
    }
};

/// x* = x + delta with every component of delta in {-eps, 0, +eps}.
/// `label_used` is the label whose loss was ascended (kUnlabeled for noise).
/// No clipping is applied to x*.
struct AdversarialExample {
    Epoch original;
    Epoch perturbed;
    Epoch perturbation;
    Label label_used = kUnlabeled;
};

namespace detail {

inline AdversarialExample apply_step(const Epoch& x, const Epoch& direction, double epsilon, Label used) {
    Epoch delta = sign_of(direction);
    delta *= epsilon;
    return {x, x + delta, delta, used};
}

inline void check_epsilon(double epsilon) {
    if (!(epsilon >= 0.0)) throw InvalidArgument("attack: epsilon must be >= 0");
}

}  // namespace detail

/// Fast gradient sign step on the loss of the true label `y`.
template <DifferentiableClassifier Substitute>
AdversarialExample fgsm(const Substitute& substitute, const Epoch& x, Label y, double epsilon) {
    detail::check_epsilon(epsilon);
    return detail::apply_step(x, substitute.input_gradient(x, y), epsilon, y);
}

/// Unsupervised variant: the substitute's own prediction replaces the label.
template <DifferentiableClassifier Substitute>
AdversarialExample ufgsm(const Substitute& substitute, const Epoch& x, double epsilon) {
    detail::check_epsilon(epsilon);
    const Label own = substitute.predict(x);
    return detail::apply_step(x, substitute.input_gradient(x, own), epsilon, own);
}

/// Control perturbation eps * sign(N(0, 1)) per component.
inline AdversarialExample random_noise(const Epoch& x, double epsilon, Rng& rng) {
    detail::check_epsilon(epsilon);
    return detail::apply_step(x, standard_normal_epoch(x.shape(), rng), epsilon, kUnlabeled);
}

/// Perturbs every epoch of `data` with `cfg.method`; fgsm uses the stored labels.
template <DifferentiableClassifier Substitute>
std::vector<AdversarialExample> craft(const Substitute& substitute, const LabeledSet& data, const AttackConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.noise_seed);
    std::vector<AdversarialExample> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        switch (cfg.method) {
            case Method::fgsm: out.push_back(fgsm(substitute, data.epoch(i), data.label(i), cfg.epsilon)); break;
            case Method::ufgsm: out.push_back(ufgsm(substitute, data.epoch(i), cfg.epsilon)); break;
            case Method::noise: out.push_back(random_noise(data.epoch(i), cfg.epsilon, rng)); break;
        }
    }
    return out;
}

inline std::vector<AdversarialExample> craft_noise(const LabeledSet& data, double epsilon, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<AdversarialExample> out;
    out.reserve(data.size());
    for (const Epoch& x : data.epochs()) out.push_back(random_noise(x, epsilon, rng));
    return out;
}

inline std::vector<Epoch> perturbed_epochs(std::span<const AdversarialExample> examples) {
    std::vector<Epoch> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(e.perturbed);
    return out;
}

}  // namespace qsynth::attack
