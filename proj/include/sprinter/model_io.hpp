#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sprinter/pipeline.hpp"

// Model files are JSON documents tagged "sprinter-model". Only terms with
// nonzero coefficients are stored; reloading reproduces predictions exactly.

namespace sprinter::model_io {

inline constexpr std::string_view kFormat = "sprinter-model";
inline constexpr int kVersion = 1;

nlohmann::json to_json(const pipeline::Model& model);
/// Throws SchemaError when required fields are missing or malformed.
pipeline::Model from_json(const nlohmann::json& doc);

std::string dump(const pipeline::Model& model);
void save(const std::filesystem::path& path, const pipeline::Model& model);
pipeline::Model load(const std::filesystem::path& path);

nlohmann::json term_json(const Term& t);
Term term_from_json(const nlohmann::json& v, std::size_t p);

}  // namespace sprinter::model_io
