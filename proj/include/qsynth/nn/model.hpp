#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/nn/model_spec.hpp"
#include "qsynth/rng.hpp"

namespace qsynth::nn {

namespace detail {

enum class OpKind { dense, conv, activation, pool };

/// One stage of the forward pipeline. Only dense and conv own parameters.
struct Op {
    OpKind kind = OpKind::dense;
    std::size_t in_size = 0;
    std::size_t out_size = 0;
    std::size_t param_offset = 0;
    std::size_t param_count = 0;
    std::size_t fan_in = 0;
    // conv: channels x samples input, `filters` kernels of `kernel` taps.
    // pool: `filters` rows of `length` samples, window `kernel`.
    std::size_t channels = 0;
    std::size_t samples = 0;
    std::size_t filters = 0;
    std::size_t kernel = 0;
    std::size_t length = 0;
};

inline std::vector<Op> build_ops(const ModelSpec& spec) {
    std::vector<Op> ops;
    std::size_t offset = 0;
    auto dense = [&](std::size_t in, std::size_t out) {
        Op op;
        op.kind = OpKind::dense;
        op.in_size = in;
        op.out_size = out;
        op.param_offset = offset;
        op.param_count = out * in + out;
        op.fan_in = in;
        offset += op.param_count;
        ops.push_back(op);
    };
    auto activation = [&](std::size_t n) {
        Op op;
        op.kind = OpKind::activation;
        op.in_size = op.out_size = n;
        ops.push_back(op);
    };

    const std::size_t d = spec.input.size();
    switch (spec.architecture) {
        case Architecture::linear_softmax:
            dense(d, spec.num_classes);
            break;
        case Architecture::mlp: {
            std::size_t in = d;
            for (std::size_t h : spec.hidden) {
                dense(in, h);
                activation(h);
                in = h;
            }
            dense(in, spec.num_classes);
            break;
        }
        case Architecture::temporal_conv: {
            const std::size_t filters = spec.hidden.front();
            const std::size_t length = spec.input.samples - spec.kernel_width + 1;
            Op conv;
            conv.kind = OpKind::conv;
            conv.channels = spec.input.channels;
            conv.samples = spec.input.samples;
            conv.filters = filters;
            conv.kernel = spec.kernel_width;
            conv.length = length;
            conv.in_size = d;
            conv.out_size = filters * length;
            conv.param_offset = offset;
            conv.param_count = filters * spec.input.channels * spec.kernel_width + filters;
            conv.fan_in = spec.input.channels * spec.kernel_width;
            offset += conv.param_count;
            ops.push_back(conv);
            activation(conv.out_size);

            Op pool;
            pool.kind = OpKind::pool;
            pool.filters = filters;
            pool.length = length;
            pool.kernel = std::min(spec.pool_width, length);
            pool.in_size = filters * length;
            pool.out_size = filters * (length / pool.kernel);
            ops.push_back(pool);
            dense(pool.out_size, spec.num_classes);
            break;
        }
    }
    return ops;
}

template <class S>
S activate(Activation a, S z) {
    using std::tanh;
    return a == Activation::relu ? (z > S(0) ? z : S(0)) : tanh(z);
}

template <class S>
void run_op(const Op& op, Activation act, std::span<const double> params, std::span<const S> in,
            std::span<S> out) {
    switch (op.kind) {
        case OpKind::dense: {
            const double* w = params.data() + op.param_offset;
            const double* b = w + op.out_size * op.in_size;
            for (std::size_t j = 0; j < op.out_size; ++j) {
                S acc = S(b[j]);
                const double* row = w + j * op.in_size;
                for (std::size_t i = 0; i < op.in_size; ++i) acc += S(row[i]) * in[i];
                out[j] = acc;
            }
            break;
        }
        case OpKind::conv: {
            const double* w = params.data() + op.param_offset;
            const double* b = w + op.filters * op.channels * op.kernel;
            for (std::size_t f = 0; f < op.filters; ++f) {
                for (std::size_t t = 0; t < op.length; ++t) {
                    S acc = S(b[f]);
                    for (std::size_t c = 0; c < op.channels; ++c) {
                        const double* k = w + (f * op.channels + c) * op.kernel;
                        const S* x = in.data() + c * op.samples + t;
                        for (std::size_t j = 0; j < op.kernel; ++j) acc += S(k[j]) * x[j];
                    }
                    out[f * op.length + t] = acc;
                }
            }
            break;
        }
        case OpKind::activation:
            for (std::size_t i = 0; i < op.in_size; ++i) out[i] = activate(act, in[i]);
            break;
        case OpKind::pool: {
            const std::size_t windows = op.length / op.kernel;
            for (std::size_t f = 0; f < op.filters; ++f) {
                for (std::size_t p = 0; p < windows; ++p) {
                    S acc = S(0);
                    for (std::size_t j = 0; j < op.kernel; ++j) acc += in[f * op.length + p * op.kernel + j];
                    out[f * windows + p] = acc / S(op.kernel);
                }
            }
            break;
        }
    }
}

template <class S>
std::vector<S> softmax(std::span<const S> z) {
    using std::exp;
    const S top = *std::max_element(z.begin(), z.end());
    std::vector<S> p(z.size());
    S total = S(0);
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = exp(z[i] - top);
        total += p[i];
    }
    for (S& v : p) v /= total;
    return p;
}

template <class S>
S log_sum_exp(std::span<const S> z) {
    using std::exp;
    using std::log;
    const S top = *std::max_element(z.begin(), z.end());
    S total = S(0);
    for (S v : z) total += exp(v - top);
    return top + log(total);
}

}  // namespace detail

/// Adam moment estimates carried by a model between training calls.
struct AdamState {
    std::vector<double> first;
    std::vector<double> second;
    std::uint64_t step = 0;
};

/// Differentiable softmax classifier over epochs.
///
/// Parameters live in one flat vector; `layer_parameters()` gives a view per
/// parameterized layer (weights row-major followed by biases). The loss is
/// the class-weighted cross-entropy `weight * -log p_y`.
class Model {
public:
    explicit Model(ModelSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        ops_ = detail::build_ops(spec_);
        params_.assign(count_params(), 0.0);
        initialize();
    }

    Model(ModelSpec spec, std::vector<double> parameters) : spec_(std::move(spec)) {
        spec_.validate();
        ops_ = detail::build_ops(spec_);
        if (parameters.size() != count_params()) {
            throw InvalidArgument("model: expected " + std::to_string(count_params()) +
                                  " parameters, got " + std::to_string(parameters.size()));
        }
        params_ = std::move(parameters);
    }

    const ModelSpec& spec() const noexcept { return spec_; }
    Shape input_shape() const noexcept { return spec_.input; }
    std::size_t num_classes() const noexcept { return spec_.num_classes; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::span<const double> parameters() const noexcept { return params_; }
    std::span<double> parameters() noexcept { return params_; }

    std::vector<std::span<const double>> layer_parameters() const {
        std::vector<std::span<const double>> views;
        for (const auto& op : ops_) {
            if (op.param_count > 0) {
                views.emplace_back(params_.data() + op.param_offset, op.param_count);
            }
        }
        return views;
    }

    AdamState& optimizer_state() noexcept { return adam_; }
    const AdamState& optimizer_state() const noexcept { return adam_; }

    /// Re-draw every parameter uniformly in +-1/sqrt(fan_in) from `spec().seed`.
    void initialize() {
        Rng rng(spec_.seed);
        for (const auto& op : ops_) {
            if (op.param_count == 0) continue;
            const double bound = 1.0 / std::sqrt(static_cast<double>(op.fan_in));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (std::size_t i = 0; i < op.param_count; ++i) params_[op.param_offset + i] = u(rng);
        }
        adam_ = {};
    }

    /// Logits evaluated entirely in precision S (parameters widened to S).
    template <class S>
    std::vector<S> logits_as(std::span<const double> x) const {
        if (x.size() != spec_.input.size()) {
            throw ShapeMismatch("model expects " + std::to_string(spec_.input.size()) +
                                " input values, got " + std::to_string(x.size()));
        }
        std::vector<S> cur(x.begin(), x.end());
        std::vector<S> next;
        for (const auto& op : ops_) {
            next.assign(op.out_size, S(0));
            detail::run_op<S>(op, spec_.activation, params_, cur, next);
            cur.swap(next);
        }
        return cur;
    }

    std::vector<double> logits(const Epoch& x) const {
        check_shape(x);
        return logits_as<double>(x.values());
    }

    std::vector<double> forward(const Epoch& x) const {
        const auto z = logits(x);
        return detail::softmax<double>(z);
    }

    /// Argmax of the logits, lowest index on ties.
    Label predict(const Epoch& x) const {
        const auto z = logits(x);
        return static_cast<Label>(std::max_element(z.begin(), z.end()) - z.begin());
    }

    double loss(const Epoch& x, Label y, double weight = 1.0) const {
        check_label(y);
        const auto z = logits(x);
        return weight * (detail::log_sum_exp<double>(z) - z[static_cast<std::size_t>(y)]);
    }

    /// Exact gradient of `loss(x, y, weight)` with respect to every input entry.
    Epoch input_gradient(const Epoch& x, Label y, double weight = 1.0) const {
        check_shape(x);
        check_label(y);
        Epoch grad(x.shape());
        backprop(x, y, weight, {}, grad.values());
        return grad;
    }

    /// Adds d loss / d params into `grad` and returns the loss.
    double accumulate_parameter_gradient(const Epoch& x, Label y, double weight,
                                         std::span<double> grad) const {
        check_shape(x);
        check_label(y);
        if (grad.size() != params_.size()) throw InvalidArgument("gradient buffer size mismatch");
        return backprop(x, y, weight, grad, {});
    }

private:
    std::size_t count_params() const {
        std::size_t n = 0;
        for (const auto& op : ops_) n += op.param_count;
        return n;
    }

    void check_shape(const Epoch& x) const {
        if (x.shape() != spec_.input) {
            throw ShapeMismatch("model expects " + to_string(spec_.input) + " epochs, got " +
                                to_string(x.shape()));
        }
    }

    void check_label(Label y) const {
        if (y < 0 || static_cast<std::size_t>(y) >= spec_.num_classes) {
            throw InvalidArgument("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(spec_.num_classes) + ")");
        }
    }

    double backprop(const Epoch& x, Label y, double weight, std::span<double> param_grad,
                    std::span<double> input_grad) const {
        // acts[i] is the input of op i; acts.back() holds the logits.
        std::vector<std::vector<double>> acts;
        acts.reserve(ops_.size() + 1);
        acts.emplace_back(x.values().begin(), x.values().end());
        for (const auto& op : ops_) {
            std::vector<double> out(op.out_size);
            detail::run_op<double>(op, spec_.activation, params_, acts.back(), out);
            acts.push_back(std::move(out));
        }
        const auto& z = acts.back();
        const auto p = detail::softmax<double>(z);
        const auto label = static_cast<std::size_t>(y);
        const double loss = weight * (detail::log_sum_exp<double>(z) - z[label]);

        std::vector<double> g(p.size());
        for (std::size_t j = 0; j < p.size(); ++j) g[j] = weight * (p[j] - (j == label ? 1.0 : 0.0));

        for (std::size_t k = ops_.size(); k-- > 0;) {
            const auto& op = ops_[k];
            const auto& in = acts[k];
            const bool need_input = k > 0 || !input_grad.empty();
            std::vector<double> gin(need_input ? op.in_size : 0, 0.0);
            switch (op.kind) {
                case detail::OpKind::dense: {
                    const double* w = params_.data() + op.param_offset;
                    for (std::size_t j = 0; j < op.out_size; ++j) {
                        const double gj = g[j];
                        if (gj == 0.0) continue;
                        const double* row = w + j * op.in_size;
                        if (need_input) {
                            for (std::size_t i = 0; i < op.in_size; ++i) gin[i] += row[i] * gj;
                        }
                        if (!param_grad.empty()) {
                            double* dw = param_grad.data() + op.param_offset + j * op.in_size;
                            for (std::size_t i = 0; i < op.in_size; ++i) dw[i] += gj * in[i];
                            param_grad[op.param_offset + op.out_size * op.in_size + j] += gj;
                        }
                    }
                    break;
                }
                case detail::OpKind::conv: {
                    const double* w = params_.data() + op.param_offset;
                    const std::size_t bias_at = op.param_offset + op.filters * op.channels * op.kernel;
                    for (std::size_t f = 0; f < op.filters; ++f) {
                        for (std::size_t t = 0; t < op.length; ++t) {
                            const double gft = g[f * op.length + t];
                            if (gft == 0.0) continue;
                            for (std::size_t c = 0; c < op.channels; ++c) {
                                const std::size_t kofs = (f * op.channels + c) * op.kernel;
                                const std::size_t xofs = c * op.samples + t;
                                for (std::size_t j = 0; j < op.kernel; ++j) {
                                    if (need_input) gin[xofs + j] += w[kofs + j] * gft;
                                    if (!param_grad.empty()) {
                                        param_grad[op.param_offset + kofs + j] += gft * in[xofs + j];
                                    }
                                }
                            }
                            if (!param_grad.empty()) param_grad[bias_at + f] += gft;
                        }
                    }
                    break;
                }
                case detail::OpKind::activation:
                    for (std::size_t i = 0; i < op.in_size; ++i) {
                        double d;
                        if (spec_.activation == Activation::relu) {
                            d = in[i] > 0.0 ? 1.0 : 0.0;
                        } else {
                            const double t = std::tanh(in[i]);
                            d = 1.0 - t * t;
                        }
                        gin[i] = g[i] * d;
                    }
                    break;
                case detail::OpKind::pool: {
                    const std::size_t windows = op.length / op.kernel;
                    const double scale = 1.0 / static_cast<double>(op.kernel);
                    for (std::size_t f = 0; f < op.filters; ++f) {
                        for (std::size_t p = 0; p < windows; ++p) {
                            const double gp = g[f * windows + p] * scale;
                            for (std::size_t j = 0; j < op.kernel; ++j) {
                                gin[f * op.length + p * op.kernel + j] = gp;
                            }
                        }
                    }
                    break;
                }
            }
            if (!need_input) break;
            g.swap(gin);
        }
        if (!input_grad.empty()) std::copy(g.begin(), g.end(), input_grad.begin());
        return loss;
    }

    ModelSpec spec_;
    std::vector<detail::Op> ops_;
    std::vector<double> params_;
    AdamState adam_;
};

}  // namespace qsynth::nn
