#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sprinter/error.hpp"

namespace sprinter {

// All indices in the library are 0-based. Interaction (j, k) with j <= k is
// the elementwise product of main-effect columns j and k; squares are the
// diagonal pairs j == k.

/// Bijection between pairs j <= k of p main effects and the q = p(p+1)/2
/// interaction indices, in lexicographic (j, k) order:
/// (0,0) -> 0, (0,1) -> 1, ..., (p-1,p-1) -> q-1.
class TauMap {
 public:
  explicit TauMap(std::size_t p);

  std::size_t p() const noexcept { return p_; }
  std::uint64_t q() const noexcept { return q_; }

  /// Index of the pair; the arguments may be given in either order.
  std::uint64_t operator()(std::size_t j, std::size_t k) const;
  std::pair<std::size_t, std::size_t> inverse(std::uint64_t ell) const;

  /// Index of (j, j), the first pair of row j.
  std::uint64_t row_start(std::size_t j) const noexcept {
    const std::uint64_t jj = j;
    return jj * p_ - jj * (jj - (jj > 0 ? 1 : 0)) / 2;
  }

 private:
  std::size_t p_;
  std::uint64_t q_;
};

/// A design column: either main effect j or the interaction of (j, k).
struct Term {
  static constexpr std::uint32_t kMain = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t j = 0;
  std::uint32_t k = kMain;

  static Term main(std::size_t j) { return Term{static_cast<std::uint32_t>(j), kMain}; }
  static Term pair(std::size_t a, std::size_t b) {
    return a <= b ? Term{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)}
                  : Term{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(a)};
  }

  bool is_main() const noexcept { return k == kMain; }
  bool is_pair() const noexcept { return k != kMain; }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

/// Position of a term in the all-pairs column order: mains 0..p-1, then
/// interactions p + tau(j, k).
std::uint64_t all_pairs_index(const TauMap& tau, const Term& term);

std::string to_string(const Term& term);

struct ColumnStats {
  double mean = 0.0;
  double sd = 0.0;  // divisor n
};

/// Two-pass mean and standard deviation with divisor n.
ColumnStats column_stats(std::span<const double> x);

/// A column is treated as constant when its variance is at most this
/// fraction of its mean square.
inline constexpr double kDegenerateRelativeVariance = 1e-12;

inline bool degenerate_variance(double variance, double mean) noexcept {
  const double mean_square = variance + mean * mean;
  return !(variance > kDegenerateRelativeVariance * mean_square);
}

/// n x p main-effect matrix stored column-major, an optional response, and
/// per-column sample statistics. Immutable after construction.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t n, std::size_t p, std::vector<double> x_column_major,
          std::vector<double> y = {}, std::vector<std::string> names = {});

  std::size_t n() const noexcept { return n_; }
  std::size_t p() const noexcept { return p_; }

  std::span<const double> column(std::size_t j) const;
  std::span<const double> x() const noexcept { return x_; }
  double at(std::size_t i, std::size_t j) const { return x_[j * n_ + i]; }

  bool has_response() const noexcept { return !y_.empty(); }
  std::span<const double> y() const noexcept { return y_; }

  const ColumnStats& stats(std::size_t j) const { return stats_.at(j); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  Dataset subset_rows(std::span<const std::size_t> rows) const;
  Dataset with_response(std::vector<double> y) const;

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<ColumnStats> stats_;
  std::vector<std::string> names_;
};

/// Elementwise product of columns j and k.
void interaction_column(const Dataset& data, std::size_t j, std::size_t k, std::span<double> out);
std::vector<double> interaction_column(const Dataset& data, std::size_t j, std::size_t k);

/// Raw (unstandardized) values of a term on the dataset.
void term_column(const Dataset& data, const Term& term, std::span<double> out);
std::vector<double> term_column(const Dataset& data, const Term& term);

/// Terms for main effects 0..p-1, optionally followed by the p squares.
std::vector<Term> main_terms(std::size_t p, bool include_squares = false);

}  // namespace sprinter
