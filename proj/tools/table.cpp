#include "table.hpp"

#include <cmath>

#include "sprinter/error.hpp"
#include "sprinter/io.hpp"

namespace sprinter::cli {

void Table::column(std::string name, bool is_volatile) {
  names_.push_back(std::move(name));
  volatile_.push_back(is_volatile);
}

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != names_.size()) throw Error("table: row width does not match the header");
  rows_.push_back(std::move(cells));
}

std::string Table::render(bool skip_volatile) const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    bool first = true;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (skip_volatile && volatile_[c]) continue;
      if (!first) out += '\t';
      out += cells[c];
      first = false;
    }
    out += '\n';
  };
  line(names_);
  for (const auto& row : rows_) line(row);
  return out;
}

std::string Table::text() const { return render(false); }
std::string Table::reproducible_text() const { return render(true); }
void Table::write(const std::filesystem::path& path) const { io::write_file(path, text()); }

std::string cell(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return io::format_double(value);
}

std::string cell(std::size_t value) { return std::to_string(value); }

}  // namespace sprinter::cli
