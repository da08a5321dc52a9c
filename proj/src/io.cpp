#include "sprinter/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace sprinter::io {
namespace {

std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, std::string_view source, std::size_t line,
                    std::size_t column) {
  const std::string_view f = trim(field);
  double value = 0.0;
  const char* first = f.data();
  const char* last = f.data() + f.size();
  if (!f.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (f.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw InputError(std::string(source) + ":" + std::to_string(line) + ": column " +
                     std::to_string(column + 1) + ": cannot parse '" + std::string(f) +
                     "' as a finite number");
  }
  return value;
}

}  // namespace

Dataset parse_dataset(std::string_view text, const CsvOptions& options, std::string_view source) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      start = end + 1;
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw InputError(std::string(source) + ": empty input");

  char delim = options.delimiter;
  if (delim == '\0') delim = lines[0].find('\t') != std::string_view::npos ? '\t' : ',';

  const auto header = split_line(lines[0], delim);
  const std::size_t width = header.size();

  std::optional<std::size_t> response;
  if (options.response_name) {
    for (std::size_t c = 0; c < width; ++c) {
      if (trim(header[c]) == *options.response_name) response = c;
    }
    if (!response) {
      throw InputError(std::string(source) + ": response column '" + *options.response_name +
                       "' not found in header");
    }
  } else if (options.response_index) {
    if (*options.response_index >= width) {
      throw InputError(std::string(source) + ": response column index " +
                       std::to_string(*options.response_index) + " out of range");
    }
    response = options.response_index;
  }

  const std::size_t n = lines.size() - 1;
  const std::size_t p = width - (response ? 1 : 0);
  if (n == 0) throw InputError(std::string(source) + ": no data rows");

  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t c = 0; c < width; ++c) {
    if (response && c == *response) continue;
    names.emplace_back(trim(header[c]));
  }

  std::vector<double> x(n * p);
  std::vector<double> y(response ? n : 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto fields = split_line(lines[i + 1], delim);
    if (fields.size() != width) {
      throw InputError(std::string(source) + ":" + std::to_string(i + 2) + ": expected " +
                       std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    std::size_t j = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const double v = parse_number(fields[c], source, i + 2, c);
      if (response && c == *response) {
        y[i] = v;
      } else {
        x[j * n + i] = v;
        ++j;
      }
    }
  }
  return Dataset(n, p, std::move(x), std::move(y), std::move(names));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

Dataset read_dataset(const std::filesystem::path& path, const CsvOptions& options) {
  return parse_dataset(read_file(path), options, path.string());
}

std::vector<double> read_vector(const std::filesystem::path& path) {
  CsvOptions opts;
  const Dataset d = parse_dataset(read_file(path), opts, path.string());
  if (d.p() != 1) throw InputError(path.string() + ": expected a single column");
  const auto col = d.column(0);
  return {col.begin(), col.end()};
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

std::string format_dataset(const Dataset& data, std::string_view response_name, char delimiter) {
  std::string out;
  out.reserve(data.n() * (data.p() + 1) * 20);
  for (std::size_t j = 0; j < data.p(); ++j) {
    if (j > 0) out += delimiter;
    out += data.names()[j];
  }
  if (data.has_response()) {
    if (data.p() > 0) out += delimiter;
    out += response_name;
  }
  out += '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j) {
      if (j > 0) out += delimiter;
      out += format_double(data.at(i, j));
    }
    if (data.has_response()) {
      if (data.p() > 0) out += delimiter;
      out += format_double(data.y()[i]);
    }
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data,
                   std::string_view response_name, char delimiter) {
  write_file(path, format_dataset(data, response_name, delimiter));
}

}  // namespace sprinter::io
