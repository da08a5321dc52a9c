#include "sprinter/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sprinter {

TauMap::TauMap(std::size_t p) : p_(p), q_(static_cast<std::uint64_t>(p) * (p + 1) / 2) {
  if (p == 0) throw ConfigError("TauMap: p must be positive");
}

std::uint64_t TauMap::operator()(std::size_t j, std::size_t k) const {
  if (j > k) std::swap(j, k);
  if (k >= p_) {
    throw IndexError("tau: pair (" + std::to_string(j) + ", " + std::to_string(k) +
                     ") out of range for p = " + std::to_string(p_));
  }
  return row_start(j) + (k - j);
}

std::pair<std::size_t, std::size_t> TauMap::inverse(std::uint64_t ell) const {
  if (ell >= q_) {
    throw IndexError("tau inverse: index " + std::to_string(ell) + " out of range for q = " +
                     std::to_string(q_));
  }
  // row_start(j) = j p - j (j - 1) / 2 is increasing in j; solve the quadratic
  // for a first guess and correct it with integer comparisons.
  const long double b = 2.0L * static_cast<long double>(p_) + 1.0L;
  const long double disc = b * b - 8.0L * static_cast<long double>(ell);
  long double guess = (b - std::sqrt(std::max(disc, 0.0L))) / 2.0L;
  std::size_t j = static_cast<std::size_t>(std::clamp(guess, 0.0L, static_cast<long double>(p_ - 1)));
  while (j > 0 && row_start(j) > ell) --j;
  while (j + 1 < p_ && row_start(j + 1) <= ell) ++j;
  return {j, j + static_cast<std::size_t>(ell - row_start(j))};
}

std::uint64_t all_pairs_index(const TauMap& tau, const Term& term) {
  if (term.is_main()) {
    if (term.j >= tau.p()) throw IndexError("main effect index out of range");
    return term.j;
  }
  return tau.p() + tau(term.j, term.k);
}

std::string to_string(const Term& term) {
  if (term.is_main()) return "X" + std::to_string(term.j);
  return "X" + std::to_string(term.j) + ":X" + std::to_string(term.k);
}

ColumnStats column_stats(std::span<const double> x) {
  ColumnStats s;
  if (x.empty()) return s;
  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean = sum / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) {
    const double d = v - s.mean;
    ss += d * d;
  }
  s.sd = std::sqrt(ss / static_cast<double>(x.size()));
  return s;
}

Dataset::Dataset(std::size_t n, std::size_t p, std::vector<double> x_column_major,
                 std::vector<double> y, std::vector<std::string> names)
    : n_(n), p_(p), x_(std::move(x_column_major)), y_(std::move(y)), names_(std::move(names)) {
  if (x_.size() != n_ * p_) {
    throw InputError("dataset: matrix has " + std::to_string(x_.size()) + " values, expected " +
                     std::to_string(n_ * p_));
  }
  if (!y_.empty() && y_.size() != n_) {
    throw InputError("dataset: response has length " + std::to_string(y_.size()) +
                     ", expected " + std::to_string(n_));
  }
  for (std::size_t idx = 0; idx < x_.size(); ++idx) {
    if (!std::isfinite(x_[idx])) {
      throw InputError("dataset: non-finite value at row " + std::to_string(idx % n_) +
                       ", column " + std::to_string(idx / n_));
    }
  }
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (!std::isfinite(y_[i])) throw InputError("dataset: non-finite response at row " + std::to_string(i));
  }
  if (names_.empty()) {
    names_.reserve(p_);
    for (std::size_t j = 0; j < p_; ++j) names_.push_back("X" + std::to_string(j));
  } else if (names_.size() != p_) {
    throw InputError("dataset: expected " + std::to_string(p_) + " column names");
  }
  stats_.reserve(p_);
  for (std::size_t j = 0; j < p_; ++j) stats_.push_back(column_stats(column(j)));
}

std::span<const double> Dataset::column(std::size_t j) const {
  if (j >= p_) throw IndexError("dataset: column " + std::to_string(j) + " out of range");
  return std::span<const double>(x_).subspan(j * n_, n_);
}

Dataset Dataset::subset_rows(std::span<const std::size_t> rows) const {
  const std::size_t m = rows.size();
  std::vector<double> x(m * p_);
  for (std::size_t j = 0; j < p_; ++j) {
    const double* src = x_.data() + j * n_;
    double* dst = x.data() + j * m;
    for (std::size_t i = 0; i < m; ++i) {
      if (rows[i] >= n_) throw IndexError("dataset: row index out of range");
      dst[i] = src[rows[i]];
    }
  }
  std::vector<double> y;
  if (has_response()) {
    y.resize(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = y_[rows[i]];
  }
  return Dataset(m, p_, std::move(x), std::move(y), names_);
}

Dataset Dataset::with_response(std::vector<double> y) const {
  return Dataset(n_, p_, x_, std::move(y), names_);
}

void interaction_column(const Dataset& data, std::size_t j, std::size_t k, std::span<double> out) {
  const auto a = data.column(j);
  const auto b = data.column(k);
  if (out.size() != a.size()) throw IndexError("interaction_column: output length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
}

std::vector<double> interaction_column(const Dataset& data, std::size_t j, std::size_t k) {
  std::vector<double> out(data.n());
  interaction_column(data, j, k, out);
  return out;
}

void term_column(const Dataset& data, const Term& term, std::span<double> out) {
  if (term.is_main()) {
    const auto col = data.column(term.j);
    if (out.size() != col.size()) throw IndexError("term_column: output length mismatch");
    std::copy(col.begin(), col.end(), out.begin());
  } else {
    interaction_column(data, term.j, term.k, out);
  }
}

std::vector<double> term_column(const Dataset& data, const Term& term) {
  std::vector<double> out(data.n());
  term_column(data, term, out);
  return out;
}

std::vector<Term> main_terms(std::size_t p, bool include_squares) {
  std::vector<Term> terms;
  terms.reserve(include_squares ? 2 * p : p);
  for (std::size_t j = 0; j < p; ++j) terms.push_back(Term::main(j));
  if (include_squares) {
    for (std::size_t j = 0; j < p; ++j) terms.push_back(Term::pair(j, j));
  }
  return terms;
}

}  // namespace sprinter
