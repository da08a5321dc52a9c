#include "sprinter/screen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sprinter/parallel.hpp"
#include "sprinter/simd/kernels.hpp"

namespace sprinter::screen {

namespace {

// Pairs (j, k) are scored from inner products over rows:
//   A = <x_j ∘ r̃, x_k> + <x_j, x_k ∘ r̃>,  B = <x_j, x_k>,  C = <x_j², x_k²>
// with r̃ the centered residual, so the interaction column itself is never
// stored. A is taken in both orders so every score is bitwise symmetric in
// j and k: equal interaction columns then get equal scores and the tie-break
// on ell applies. Rows j are processed in blocks of kRowBlock so each x_k
// (and x_k², x_k ∘ r̃) is loaded once for the whole block.
constexpr std::size_t kRowBlock = 4;
static_assert(2 * kRowBlock <= simd::kMaxMultiDot);

struct Prepared {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> u;   // x_j ∘ r̃, column-major
  std::vector<double> sq;  // x_j², column-major
  double r_mean = 0.0;     // mean of r̃ (zero up to rounding)
  double sd_r = 0.0;
};

Prepared prepare(const Dataset& data, std::span<const double> r) {
  if (r.size() != data.n()) {
    throw InputError("screen: residual has " + std::to_string(r.size()) + " values, data has " +
                     std::to_string(data.n()) + " rows");
  }
  for (double v : r) {
    if (!std::isfinite(v)) throw InputError("screen: non-finite residual value");
  }
  Prepared prep;
  prep.n = data.n();
  prep.p = data.p();
  const ColumnStats rs = column_stats(r);
  if (!(rs.sd > 0.0) || degenerate_variance(rs.sd * rs.sd, rs.mean)) {
    throw DegenerateResidualError("screen: residual has zero variance; every correlation is undefined");
  }
  prep.sd_r = rs.sd;
  std::vector<double> rc(r.begin(), r.end());
  double sum = 0.0;
  for (double& v : rc) {
    v -= rs.mean;
    sum += v;
  }
  prep.r_mean = sum / static_cast<double>(prep.n);

  const auto& kern = simd::active();
  prep.u.resize(prep.n * prep.p);
  prep.sq.resize(prep.n * prep.p);
  for (std::size_t j = 0; j < prep.p; ++j) {
    const double* x = data.x().data() + j * prep.n;
    kern.hadamard(x, rc.data(), prep.u.data() + j * prep.n, prep.n);
    kern.hadamard(x, x, prep.sq.data() + j * prep.n, prep.n);
  }
  return prep;
}

std::size_t tile_columns(std::size_t n) {
  constexpr std::size_t kTileBytes = 256 * 1024;
  return std::clamp<std::size_t>(kTileBytes / (2 * sizeof(double) * std::max<std::size_t>(n, 1)), 16, 1024);
}

// Calls visit(worker, j, k, ell, cov, var, zero_variance) once per pair.
// Worker w owns row blocks w, w + W, ...; the arithmetic for a pair does not
// depend on W.
template <class Visit>
void scan_pairs(const Dataset& data, const Prepared& prep, std::size_t workers, Visit&& visit) {
  const std::size_t n = prep.n;
  const std::size_t p = prep.p;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double* x = data.x().data();
  const std::size_t tile = tile_columns(n);
  const std::size_t blocks = (p + kRowBlock - 1) / kRowBlock;
  const TauMap tau(p);

  parallel_workers(workers, [&](std::size_t w, std::size_t total) {
    const auto& kern = simd::active();
    const double* lefts_x[2 * kRowBlock];
    const double* lefts_sq[kRowBlock];
    double d[2 * kRowBlock];
    double e[kRowBlock];
    double f[kRowBlock];
    for (std::size_t k0 = 0; k0 < p; k0 += tile) {
      const std::size_t k1 = std::min(p, k0 + tile);
      for (std::size_t b = w; b < blocks; b += total) {
        const std::size_t j0 = b * kRowBlock;
        if (j0 >= k1) break;
        const std::size_t count = std::min(kRowBlock, p - j0);
        for (std::size_t t = 0; t < count; ++t) {
          lefts_x[t] = prep.u.data() + (j0 + t) * n;
          lefts_x[count + t] = x + (j0 + t) * n;
          lefts_sq[t] = prep.sq.data() + (j0 + t) * n;
        }
        for (std::size_t k = std::max(k0, j0); k < k1; ++k) {
          kern.multi_dot(lefts_x, 2 * count, x + k * n, n, d);
          kern.multi_dot(lefts_sq, count, prep.sq.data() + k * n, n, e);
          kern.multi_dot(lefts_x + count, count, prep.u.data() + k * n, n, f);
          for (std::size_t t = 0; t < count && j0 + t <= k; ++t) {
            const std::size_t j = j0 + t;
            const double mean = d[count + t] * inv_n;
            const double var = e[t] * inv_n - mean * mean;
            const double cov = 0.5 * (d[t] + f[t]) * inv_n - mean * prep.r_mean;
            visit(w, j, k, tau.row_start(j) + (k - j), cov, var, degenerate_variance(var, mean));
          }
        }
      }
    }
  });
}

double correlation(double cov, double var, double sd_r) {
  const double c = cov / (std::sqrt(var) * sd_r);
  return std::clamp(c, -1.0, 1.0);
}

void sort_ranked(std::vector<ScreenScore>& v) { std::sort(v.begin(), v.end(), ranks_before); }

}  // namespace

ScreenResult screen_topm(const Dataset& data, std::span<const double> r, std::size_t m, const ScreenOptions& options) {
  if (m == 0) throw ConfigError("screen: m must be at least 1");
  const Prepared prep = prepare(data, r);
  const std::size_t workers = resolve_threads(options.threads);

  struct Worker {
    std::vector<ScreenScore> heap;  // worst candidate at the front
    std::uint64_t scanned = 0;
    std::uint64_t zero = 0;
    std::size_t peak = 0;
  };
  std::vector<Worker> state(workers);
  const TauMap tau(prep.p);
  const std::size_t cap = static_cast<std::size_t>(std::min<std::uint64_t>(m, tau.q()));
  for (auto& s : state) s.heap.reserve(cap);

  scan_pairs(data, prep, workers,
             [&](std::size_t w, std::size_t j, std::size_t k, std::uint64_t ell, double cov, double var, bool zero) {
               Worker& s = state[w];
               ++s.scanned;
               if (zero) {
                 ++s.zero;
                 return;
               }
               const ScreenScore cand{Term::pair(j, k), ell, std::abs(correlation(cov, var, prep.sd_r))};
               if (s.heap.size() < cap) {
                 s.heap.push_back(cand);
                 std::push_heap(s.heap.begin(), s.heap.end(), ranks_before);
                 s.peak = std::max(s.peak, s.heap.size());
               } else if (ranks_before(cand, s.heap.front())) {
                 std::pop_heap(s.heap.begin(), s.heap.end(), ranks_before);
                 s.heap.back() = cand;
                 std::push_heap(s.heap.begin(), s.heap.end(), ranks_before);
               }
             });

  ScreenResult out;
  out.mode = Mode::top_m;
  out.residual_sd = prep.sd_r;
  for (auto& s : state) {
    out.stats.pairs_scanned += s.scanned;
    out.stats.zero_variance += s.zero;
    out.stats.peak_tracked = std::max(out.stats.peak_tracked, s.peak);
    out.selected.insert(out.selected.end(), s.heap.begin(), s.heap.end());
  }
  sort_ranked(out.selected);
  if (out.selected.size() > m) out.selected.resize(m);
  return out;
}

ScreenResult screen_threshold(const Dataset& data, std::span<const double> r, double eta,
                              const ScreenOptions& options) {
  if (std::isnan(eta) || eta < 0.0) throw ConfigError("screen: eta must be non-negative");
  const Prepared prep = prepare(data, r);
  const std::size_t workers = resolve_threads(options.threads);

  struct Worker {
    std::vector<ScreenScore> kept;
    std::uint64_t scanned = 0;
    std::uint64_t zero = 0;
  };
  std::vector<Worker> state(workers);

  scan_pairs(data, prep, workers,
             [&](std::size_t w, std::size_t j, std::size_t k, std::uint64_t ell, double cov, double var, bool zero) {
               Worker& s = state[w];
               ++s.scanned;
               if (zero) {
                 ++s.zero;
                 return;
               }
               const double score = prep.sd_r * std::abs(correlation(cov, var, prep.sd_r));
               if (score > eta) s.kept.push_back({Term::pair(j, k), ell, score});
             });

  ScreenResult out;
  out.mode = Mode::threshold;
  out.residual_sd = prep.sd_r;
  for (auto& s : state) {
    out.stats.pairs_scanned += s.scanned;
    out.stats.zero_variance += s.zero;
    out.selected.insert(out.selected.end(), s.kept.begin(), s.kept.end());
  }
  sort_ranked(out.selected);
  return out;
}

double residual_correlation(std::span<const double> z, std::span<const double> r) {
  if (z.size() != r.size()) throw InputError("residual_correlation: length mismatch");
  if (z.empty()) return 0.0;
  const ColumnStats zs = column_stats(z);
  const ColumnStats rs = column_stats(r);
  if (degenerate_variance(zs.sd * zs.sd, zs.mean) || degenerate_variance(rs.sd * rs.sd, rs.mean)) return 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) cross += (z[i] - zs.mean) * (r[i] - rs.mean);
  const double c = cross / static_cast<double>(z.size()) / (zs.sd * rs.sd);
  return std::clamp(c, -1.0, 1.0);
}

std::size_t m_over_log_n(std::size_t n) noexcept {
  if (n < 3) return 1;
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) / std::log(static_cast<double>(n))));
}

}  // namespace sprinter::screen
