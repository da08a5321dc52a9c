#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sprinter/core.hpp"

namespace sprinter::screen {

enum class Mode { top_m, threshold };

struct ScreenScore {
  Term pair;
  std::uint64_t ell = 0;  // tau index of the pair
  /// |cor(Z, r)| in top-m mode, sd(r)·|cor(Z, r)| in threshold mode.
  double score = 0.0;
};

struct PassStats {
  std::uint64_t pairs_scanned = 0;
  /// Largest number of candidates any worker held at once (top-m mode).
  std::size_t peak_tracked = 0;
  /// Interaction columns with (numerically) zero variance, scored 0.
  std::uint64_t zero_variance = 0;
};

struct ScreenResult {
  Mode mode = Mode::top_m;
  /// Descending score; equal scores in ascending ell.
  std::vector<ScreenScore> selected;
  PassStats stats;
  double residual_sd = 0.0;
};

struct ScreenOptions {
  /// Workers over the pair triangle; 0 = default. Output does not depend on it.
  std::size_t threads = 0;
};

/// The m interactions with the largest |cor(Z_ℓ, r)|, ties to the smaller ℓ.
/// Zero-variance interactions are never selected.
ScreenResult screen_topm(const Dataset& data, std::span<const double> r, std::size_t m,
                         const ScreenOptions& options = {});

/// All interactions with sd(r)·|cor(Z_ℓ, r)| > eta (strictly).
ScreenResult screen_threshold(const Dataset& data, std::span<const double> r, double eta,
                              const ScreenOptions& options = {});

/// Pearson correlation with divisor n; 0 when either vector is constant.
double residual_correlation(std::span<const double> z, std::span<const double> r);

/// Default screening budget m = n.
inline std::size_t default_m(std::size_t n) noexcept { return n; }
/// The ⌈n / log n⌉ preset (natural log; at least 1).
std::size_t m_over_log_n(std::size_t n) noexcept;

/// True when `a` ranks ahead of `b`: larger score, then smaller ℓ.
inline bool ranks_before(const ScreenScore& a, const ScreenScore& b) noexcept {
  return a.score > b.score || (a.score == b.score && a.ell < b.ell);
}

}  // namespace sprinter::screen
