#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "sprinter/core.hpp"

namespace sprinter::io {

struct CsvOptions {
  // '\0' detects comma or tab from the header line.
  char delimiter = '\0';
  // Response column selected by header name or by 0-based position. Without
  // either, every column is a main effect and the dataset has no response.
  std::optional<std::string> response_name;
  std::optional<std::size_t> response_index;
};

/// Parses delimiter-separated text with a header row, one row per
/// observation. Parse failures throw InputError naming the line and column.
Dataset parse_dataset(std::string_view text, const CsvOptions& options,
                      std::string_view source = "<memory>");
Dataset read_dataset(const std::filesystem::path& path, const CsvOptions& options);

/// Reads a single numeric column (with header) such as a separate response file.
std::vector<double> read_vector(const std::filesystem::path& path);

/// Writes the main effects followed by the response (if any) under
/// `response_name`. Values use the shortest round-trip representation.
void write_dataset(const std::filesystem::path& path, const Dataset& data,
                   std::string_view response_name = "y", char delimiter = ',');
std::string format_dataset(const Dataset& data, std::string_view response_name = "y",
                           char delimiter = ',');

std::string format_double(double value);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace sprinter::io
