#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsynth/errors.hpp"
#include "qsynth/nn/model.hpp"

namespace qsynth::nn {

// Checkpoint document (JSON object):
//   format        "qsynth-model"
//   version       1
//   architecture  "linear_softmax" | "mlp" | "temporal_conv"
//   channels, samples, num_classes, kernel_width, pool_width   unsigned integers
//   hidden        array of unsigned integers
//   activation    "relu" | "tanh"
//   seed          unsigned integer (initialization seed)
//   parameters    array of decimal numbers, flat layout of Model::parameters()
// Numbers are printed with round-trip precision. Optimizer state is not saved.

inline nlohmann::json spec_to_json(const ModelSpec& spec) {
    return {
        {"architecture", std::string(to_string(spec.architecture))},
        {"channels", spec.input.channels},
        {"samples", spec.input.samples},
        {"num_classes", spec.num_classes},
        {"hidden", spec.hidden},
        {"activation", std::string(to_string(spec.activation))},
        {"kernel_width", spec.kernel_width},
        {"pool_width", spec.pool_width},
        {"seed", spec.seed},
    };
}

inline nlohmann::json checkpoint_to_json(const Model& model) {
    auto doc = spec_to_json(model.spec());
    doc["format"] = "qsynth-model";
    doc["version"] = 1;
    doc["parameters"] = std::vector<double>(model.parameters().begin(), model.parameters().end());
    return doc;
}

inline Model checkpoint_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "qsynth-model") {
            throw InvalidArgument("checkpoint: unexpected format tag");
        }
        if (doc.at("version").get<int>() != 1) throw InvalidArgument("checkpoint: unsupported version");
        ModelSpec spec;
        spec.architecture = parse_architecture(doc.at("architecture").get<std::string>());
        spec.input = {doc.at("channels").get<std::size_t>(), doc.at("samples").get<std::size_t>()};
        spec.num_classes = doc.at("num_classes").get<std::size_t>();
        spec.hidden = doc.at("hidden").get<std::vector<std::size_t>>();
        spec.activation = parse_activation(doc.at("activation").get<std::string>());
        spec.kernel_width = doc.at("kernel_width").get<std::size_t>();
        spec.pool_width = doc.at("pool_width").get<std::size_t>();
        spec.seed = doc.at("seed").get<std::uint64_t>();
        return Model(spec, doc.at("parameters").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("checkpoint: ") + e.what());
    }
}

inline void write_checkpoint(const std::string& path, const Model& model) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << checkpoint_to_json(model).dump(1) << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

inline Model read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("checkpoint '" + path + "': " + e.what());
    }
    return checkpoint_from_json(doc);
}

}  // namespace qsynth::nn
