#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops shared by the lasso solver and the pair scanner.
// Every kernel has a scalar reference implementation; vector variants are
// compiled in separate translation units and selected once at runtime from
// the CPU's capabilities (override with SPRINTER_SIMD=scalar|avx2|neon).
//
// Within one kernel table the arithmetic for a given output never depends on
// how many outputs are computed together, so results are reproducible
// regardless of blocking or thread partition.

namespace sprinter::simd {

enum class Isa { scalar, avx2, neon };

inline constexpr std::size_t kMaxMultiDot = 8;

struct KernelTable {
  Isa isa;
  const char* name;

  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  /// out[c] = dot(lefts[c], right) for c < count <= kMaxMultiDot. `right` is
  /// read once per element for all lefts.
  void (*multi_dot)(const double* const* lefts, std::size_t count, const double* right,
                    std::size_t n, double* out);

  /// out[i] = a[i] * b[i]
  void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the variant is not compiled in or the CPU lacks support.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

/// The table in use. Chosen on first call; see set_active.
const KernelTable& active() noexcept;

/// Forces a specific table (tests and benchmarks). Returns false, leaving the
/// selection unchanged, when that variant is unavailable.
bool set_active(Isa isa) noexcept;

const KernelTable* find(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

}  // namespace sprinter::simd
