#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sprinter::cli {

// Tab-separated output table. Columns marked volatile (timings, measured
// memory) are excluded from the reproducible digest.
class Table {
 public:
  void column(std::string name, bool is_volatile = false);
  void add_row(std::vector<std::string> cells);

  std::string text() const;
  std::string reproducible_text() const;
  void write(const std::filesystem::path& path) const;

  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

 private:
  std::string render(bool skip_volatile) const;

  std::vector<std::string> names_;
  std::vector<bool> volatile_;
  std::vector<std::vector<std::string>> rows_;
};

/// Shortest round-trip text for finite values; "nan"/"inf" otherwise.
std::string cell(double value);
std::string cell(std::size_t value);

}  // namespace sprinter::cli
