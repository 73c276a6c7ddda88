#include "multicred/model_io.hpp"

#include <fstream>
#include <sstream>

#include "multicred/errors.hpp"

namespace multicred {
namespace {

using nlohmann::json;

std::vector<double> read_array(const json& j, const std::string& key, std::size_t expected, const std::string& layer) {
    if (!j.contains(key) || !j[key].is_array()) throw ParseError("layer " + layer + ": missing array \"" + key + "\"");
    auto v = j[key].get<std::vector<double>>();
    if (v.size() != expected) {
        throw ParseError("layer " + layer + ": \"" + key + "\" has " + std::to_string(v.size()) +
                         " values, expected " + std::to_string(expected));
    }
    return v;
}

}  // namespace

json model_to_json(const nn::Model& model) {
    json layers = json::array();
    for (std::size_t i = 0; i < model.num_layers(); ++i) {
        const auto& s = model.spec().layers[i];
        const auto& p = model.layer(i);
        json l = {{"kind", nn::to_string(s.kind)},
                  {"name", s.name},
                  {"input_dim", s.input_dim},
                  {"output_dim", s.output_dim}};
        switch (s.kind) {
            case nn::LayerKind::dense:
                l["weight"] = p.weight.data();
                l["bias"] = p.bias;
                break;
            case nn::LayerKind::batchnorm:
                l["momentum"] = s.momentum;
                l["epsilon"] = s.epsilon;
                l["gamma"] = p.gamma;
                l["beta"] = p.beta;
                l["running_mean"] = p.running_mean;
                l["running_var"] = p.running_var;
                break;
            case nn::LayerKind::dropout:
                l["dropout_rate"] = s.dropout_rate;
                break;
            default:
                break;
        }
        layers.push_back(std::move(l));
    }
    return {{"layers", std::move(layers)}};
}

nn::Model model_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array()) {
        throw ParseError("model document lacks a \"layers\" array");
    }
    nn::NetworkSpec spec;
    try {
        for (const auto& l : doc["layers"]) {
            nn::LayerSpec s;
            s.kind = nn::layer_kind_from_string(l.at("kind").get<std::string>());
            s.name = l.at("name").get<std::string>();
            s.input_dim = l.at("input_dim").get<std::size_t>();
            s.output_dim = l.at("output_dim").get<std::size_t>();
            if (s.kind == nn::LayerKind::batchnorm) {
                s.momentum = l.at("momentum").get<double>();
                s.epsilon = l.at("epsilon").get<double>();
            }
            if (s.kind == nn::LayerKind::dropout) s.dropout_rate = l.at("dropout_rate").get<double>();
            spec.layers.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed layer entry: ") + e.what());
    }
    try {
        spec.validate();
    } catch (const DomainError& e) {
        throw ParseError(std::string("invalid network: ") + e.what());
    }

    nn::Model model(spec);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& s = spec.layers[i];
        const auto& l = doc["layers"][i];
        auto& p = model.layer(i);
        if (s.kind == nn::LayerKind::dense) {
            p.weight = Matrix(s.input_dim, s.output_dim, read_array(l, "weight", s.input_dim * s.output_dim, s.name));
            p.bias = read_array(l, "bias", s.output_dim, s.name);
        } else if (s.kind == nn::LayerKind::batchnorm) {
            p.gamma = read_array(l, "gamma", s.output_dim, s.name);
            p.beta = read_array(l, "beta", s.output_dim, s.name);
            p.running_mean = read_array(l, "running_mean", s.output_dim, s.name);
            p.running_var = read_array(l, "running_var", s.output_dim, s.name);
            if (!all_finite(p.running_mean) || !all_finite(p.running_var)) {
                throw ParseError("layer " + s.name + ": running statistics are not finite");
            }
        }
    }
    return model;
}

json make_artifact(std::string_view kind, const nn::Model& model) {
    return {{"format_version", kModelFormatVersion}, {"artifact_kind", kind}, {"model", model_to_json(model)}};
}

nn::Model model_from_artifact(const json& doc, std::string_view expected_kind) {
    if (!doc.is_object() || !doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
        throw ParseError("artifact lacks an integer format_version");
    }
    const int version = doc["format_version"].get<int>();
    if (version != kModelFormatVersion) {
        throw ParseError("artifact format version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kModelFormatVersion) + ")");
    }
    const std::string kind = doc.value("artifact_kind", "");
    if (kind != expected_kind) {
        throw ParseError("artifact is a \"" + kind + "\", expected \"" + std::string(expected_kind) + "\"");
    }
    if (!doc.contains("model")) throw ParseError("artifact lacks a model");
    return model_from_json(doc["model"]);
}

json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& doc, int indent) {
    write_text_file(path, doc.dump(indent) + "\n");
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace multicred
