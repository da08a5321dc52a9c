#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace sprinter::cli {

/// Lowercase hex SHA-256 of a file's bytes. Throws InputError if unreadable.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

struct OutputFile {
  std::string path;
  /// Digest replay compares; differs from the file digest when the file holds
  /// timing columns (then it covers only the reproducible columns).
  std::optional<std::string> reproducible_sha256;
};

/// What a subcommand reports back to the driver.
struct RunRecord {
  std::vector<std::string> inputs;
  std::vector<OutputFile> outputs;
  double fit_seconds = 0.0;
  nlohmann::json results = nlohmann::json::object();
  std::vector<std::string> warnings;
  /// Nonzero for outcomes that still produce outputs (failed checks,
  /// non-convergence).
  int exit_code = 0;
};

struct ManifestContext {
  std::string subcommand;
  nlohmann::json options;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  double wall_seconds = 0.0;
  std::size_t peak_heap_bytes = 0;
};

nlohmann::json make_manifest(const ManifestContext& context, const RunRecord& record);

}  // namespace sprinter::cli
