#pragma once

#include <filesystem>
#include <string_view>

#include <json.hpp>

#include "multicred/nn.hpp"

namespace multicred {

/// Major version of the model document layout. Documents with another major
/// version are rejected.
inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const nn::Model& model);
nn::Model model_from_json(const nlohmann::json& doc);

/// `{"format_version", "artifact_kind", "model"}` envelope.
nlohmann::json make_artifact(std::string_view kind, const nn::Model& model);

/// Checks version and kind, then decodes the embedded model. Throws ParseError.
nn::Model model_from_artifact(const nlohmann::json& doc, std::string_view expected_kind);

/// Reads and parses a JSON file. IoError when unreadable, ParseError with the
/// byte offset when malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes `doc` (pretty-printed when indent >= 0). Throws IoError naming the path.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc, int indent = -1);

void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace multicred
