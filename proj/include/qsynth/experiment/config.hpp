#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsynth/attack.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/nn/model_spec.hpp"
#include "qsynth/nn/train.hpp"
#include "qsynth/synthesis/config.hpp"

namespace qsynth::experiment {

/// How the substitute's training set is grown.
enum class Method { active, jacobian, noise_only };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::active: return "active";
        case Method::jacobian: return "jacobian";
        case Method::noise_only: return "noise";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    if (s == "active") return Method::active;
    if (s == "jacobian") return Method::jacobian;
    if (s == "noise" || s == "noise-only" || s == "noise_only") return Method::noise_only;
    throw ConfigError("unknown method '" + std::string(s) + "' (expected active, jacobian or noise)");
}

struct DatasetConfig {
    std::string name = "synthetic";
    std::string generator = "synthetic_epochs";  ///< "synthetic_epochs" | "blobs"
    std::size_t num_classes = 2;
    std::size_t channels = 4;
    std::size_t samples = 16;
    std::size_t train_per_class = 400;
    std::size_t test_per_class = 200;
    std::size_t pool_per_class = 400;
    double noise = 3.0;       ///< synthetic_epochs: noise-to-signal ratio
    double separation = 6.0;  ///< blobs
    double sigma = 1.0;       ///< blobs
    std::string train_file;   ///< optional EPO1 overrides of the generated splits
    std::string test_file;
    std::string pool_file;
};

/// Architecture without the data-dependent parts (shape, classes, seed).
struct ModelConfig {
    nn::Architecture architecture = nn::Architecture::mlp;
    std::vector<std::size_t> hidden{32};
    nn::Activation activation = nn::Activation::relu;
    std::size_t kernel_width = 5;
    std::size_t pool_width = 4;
    nn::TrainConfig train;

    nn::ModelSpec spec(Shape input, std::size_t num_classes, std::uint64_t seed) const {
        nn::ModelSpec s;
        s.architecture = architecture;
        s.input = input;
        s.num_classes = num_classes;
        s.hidden = architecture == nn::Architecture::linear_softmax ? std::vector<std::size_t>{} : hidden;
        s.activation = activation;
        s.kernel_width = kernel_width;
        s.pool_width = pool_width;
        s.seed = seed;
        return s;
    }
};

struct BalanceConfig {
    std::size_t per_class = 200;
    bool strict = true;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t runs = 1;
    std::string output_dir = "out";
    Method method = Method::active;
    std::vector<std::size_t> budgets;  ///< empty: use the synthesis / jacobian plan as configured
    DatasetConfig dataset;
    ModelConfig target;
    std::string target_checkpoint;     ///< optional: load instead of training the target
    ModelConfig substitute;
    BalanceConfig balance;
    synthesis::SynthesisConfig synthesis;
    synthesis::JacobianConfig jacobian;
    attack::AttackConfig attack{0.2};

    std::size_t initial_size() const { return balance.per_class * dataset.num_classes; }
};

namespace detail {

/// Reads keys from one JSON object and rejects any it was not asked about.
class Section {
public:
    Section(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(where() + "must be an object");
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!obj_.contains(key)) return;
        try {
            out = obj_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(where() + "key '" + key + "' has the wrong type");
        }
    }

    template <class Fn>
    void read_with(const char* key, Fn&& parse) {
        seen_.insert(key);
        if (!obj_.contains(key)) return;
        const auto& v = obj_.at(key);
        if (!v.is_string()) throw ConfigError(where() + "key '" + key + "' must be a string");
        try {
            parse(v.get<std::string>());
        } catch (const InvalidArgument& e) {
            throw ConfigError(where() + e.what());
        }
    }

    bool has(const char* key) {
        seen_.insert(key);
        return obj_.contains(key);
    }

    Section child(const char* key) {
        seen_.insert(key);
        return Section(obj_.at(key), path_ + key + ".");
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.contains(it.key())) throw ConfigError("unknown config key '" + path_ + it.key() + "'");
        }
    }

private:
    std::string where() const { return path_.empty() ? std::string("config: ") : "config " + path_ + ": "; }

    const nlohmann::json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void read_train(Section s, nn::TrainConfig& t) {
    s.read("learning_rate", t.learning_rate);
    s.read("beta1", t.beta1);
    s.read("beta2", t.beta2);
    s.read("adam_epsilon", t.adam_epsilon);
    s.read("max_epochs", t.max_epochs);
    s.read("patience", t.patience);
    s.read("validation_fraction", t.validation_fraction);
    s.read_with("class_weighting", [&](const std::string& v) { t.class_weighting = nn::parse_class_weighting(v); });
    s.read("batch_size", t.batch_size);
    s.finish();
}

inline void read_model(Section s, ModelConfig& m) {
    s.read_with("architecture", [&](const std::string& v) { m.architecture = nn::parse_architecture(v); });
    s.read("hidden", m.hidden);
    s.read_with("activation", [&](const std::string& v) { m.activation = nn::parse_activation(v); });
    s.read("kernel_width", m.kernel_width);
    s.read("pool_width", m.pool_width);
    if (s.has("train")) read_train(s.child("train"), m.train);
    s.finish();
}

inline nlohmann::json train_to_json(const nn::TrainConfig& t) {
    return {{"learning_rate", t.learning_rate}, {"beta1", t.beta1},
            {"beta2", t.beta2}, {"adam_epsilon", t.adam_epsilon},
            {"max_epochs", t.max_epochs}, {"patience", t.patience},
            {"validation_fraction", t.validation_fraction},
            {"class_weighting", std::string(nn::to_string(t.class_weighting))},
            {"batch_size", t.batch_size}};
}

inline nlohmann::json model_to_json(const ModelConfig& m) {
    return {{"architecture", std::string(nn::to_string(m.architecture))},
            {"hidden", m.hidden},
            {"activation", std::string(nn::to_string(m.activation))},
            {"kernel_width", m.kernel_width},
            {"pool_width", m.pool_width},
            {"train", train_to_json(m.train)}};
}

}  // namespace detail

/// Builds a config from a JSON document; absent keys keep their defaults and
/// unknown keys are errors. See configs/example.json for the full schema.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
    ExperimentConfig c;
    detail::Section root(doc, "");
    root.read("seed", c.seed);
    root.read("runs", c.runs);
    root.read("output_dir", c.output_dir);
    root.read_with("method", [&](const std::string& v) { c.method = parse_method(v); });
    root.read("budgets", c.budgets);
    root.read("target_checkpoint", c.target_checkpoint);

    if (root.has("dataset")) {
        auto s = root.child("dataset");
        auto& d = c.dataset;
        s.read("name", d.name);
        s.read("generator", d.generator);
        s.read("num_classes", d.num_classes);
        s.read("channels", d.channels);
        s.read("samples", d.samples);
        s.read("train_per_class", d.train_per_class);
        s.read("test_per_class", d.test_per_class);
        s.read("pool_per_class", d.pool_per_class);
        s.read("noise", d.noise);
        s.read("separation", d.separation);
        s.read("sigma", d.sigma);
        s.read("train_file", d.train_file);
        s.read("test_file", d.test_file);
        s.read("pool_file", d.pool_file);
        s.finish();
    }
    if (root.has("target")) detail::read_model(root.child("target"), c.target);
    if (root.has("substitute")) detail::read_model(root.child("substitute"), c.substitute);
    if (root.has("balance")) {
        auto s = root.child("balance");
        s.read("per_class", c.balance.per_class);
        s.read("strict", c.balance.strict);
        s.finish();
    }
    if (root.has("synthesis")) {
        auto s = root.child("synthesis");
        auto& y = c.synthesis;
        s.read("iterations", y.max_iterations);
        s.read("per_iteration", y.per_iteration);
        s.read("search_steps", y.search_steps);
        s.read("offset_norm", y.offset_norm);
        s.read_with("retrain", [&](const std::string& v) { y.retrain = synthesis::parse_retrain_mode(v); });
        s.read("resample_limit", y.resample_limit);
        s.read("reselect_limit", y.reselect_limit);
        s.read("random_fallback", y.random_fallback);
        s.finish();
    }
    if (root.has("jacobian")) {
        auto s = root.child("jacobian");
        s.read("iterations", c.jacobian.iterations);
        s.read("step", c.jacobian.step);
        s.read_with("retrain", [&](const std::string& v) { c.jacobian.retrain = synthesis::parse_retrain_mode(v); });
        s.finish();
    }
    if (root.has("attack")) {
        auto s = root.child("attack");
        s.read("epsilon", c.attack.epsilon);
        s.read_with("method", [&](const std::string& v) { c.attack.method = attack::parse_method(v); });
        s.finish();
    }
    root.finish();

    if (c.runs < 1) throw ConfigError("config: runs must be >= 1");
    if (c.dataset.generator != "synthetic_epochs" && c.dataset.generator != "blobs") {
        throw ConfigError("config dataset.generator: expected synthetic_epochs or blobs");
    }
    if (c.dataset.num_classes < 2) throw ConfigError("config dataset.num_classes: need at least 2");
    if (c.balance.per_class < 1) throw ConfigError("config balance.per_class: must be >= 1");
    for (std::size_t i = 1; i < c.budgets.size(); ++i) {
        if (c.budgets[i] <= c.budgets[i - 1]) throw ConfigError("config budgets: must be strictly increasing");
    }
    try {
        c.synthesis.validate();
        c.jacobian.validate();
        c.attack.validate();
        c.target.train.validate();
        c.substitute.train.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return parse_config(doc);
}

/// The full effective config, parseable by parse_config.
inline nlohmann::json to_json(const ExperimentConfig& c) {
    const auto& d = c.dataset;
    return {
        {"seed", c.seed},
        {"runs", c.runs},
        {"output_dir", c.output_dir},
        {"method", std::string(to_string(c.method))},
        {"budgets", c.budgets},
        {"target_checkpoint", c.target_checkpoint},
        {"dataset",
         {{"name", d.name}, {"generator", d.generator}, {"num_classes", d.num_classes},
          {"channels", d.channels}, {"samples", d.samples}, {"train_per_class", d.train_per_class},
          {"test_per_class", d.test_per_class}, {"pool_per_class", d.pool_per_class}, {"noise", d.noise},
          {"separation", d.separation}, {"sigma", d.sigma}, {"train_file", d.train_file},
          {"test_file", d.test_file}, {"pool_file", d.pool_file}}},
        {"target", detail::model_to_json(c.target)},
        {"substitute", detail::model_to_json(c.substitute)},
        {"balance", {{"per_class", c.balance.per_class}, {"strict", c.balance.strict}}},
        {"synthesis",
         {{"iterations", c.synthesis.max_iterations}, {"per_iteration", c.synthesis.per_iteration},
          {"search_steps", c.synthesis.search_steps}, {"offset_norm", c.synthesis.offset_norm},
          {"retrain", std::string(synthesis::to_string(c.synthesis.retrain))},
          {"resample_limit", c.synthesis.resample_limit}, {"reselect_limit", c.synthesis.reselect_limit},
          {"random_fallback", c.synthesis.random_fallback}}},
        {"jacobian",
         {{"iterations", c.jacobian.iterations}, {"step", c.jacobian.step},
          {"retrain", std::string(synthesis::to_string(c.jacobian.retrain))}}},
        {"attack", {{"epsilon", c.attack.epsilon}, {"method", std::string(attack::to_string(c.attack.method))}}},
    };
}

}  // namespace qsynth::experiment
