// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "sprinter/simd/kernels.hpp"

namespace sprinter::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <std::size_t Count>
void multi_dot_fixed(const double* const* lefts, const double* right, std::size_t n, double* out) {
  __m256d acc[Count];
  for (std::size_t c = 0; c < Count; ++c) acc[c] = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_loadu_pd(right + i);
    for (std::size_t c = 0; c < Count; ++c) {
      acc[c] = _mm256_fmadd_pd(_mm256_loadu_pd(lefts[c] + i), r, acc[c]);
    }
  }
  for (std::size_t c = 0; c < Count; ++c) {
    double tail = 0.0;
    for (std::size_t t = i; t < n; ++t) tail += lefts[c][t] * right[t];
    out[c] = hsum(acc[c]) + tail;
  }
}

void multi_dot_avx2(const double* const* lefts, std::size_t count, const double* right,
                    std::size_t n, double* out) {
  switch (count) {
    case 0: return;
    case 1: return multi_dot_fixed<1>(lefts, right, n, out);
    case 2: return multi_dot_fixed<2>(lefts, right, n, out);
    case 3: return multi_dot_fixed<3>(lefts, right, n, out);
    case 4: return multi_dot_fixed<4>(lefts, right, n, out);
    case 5: return multi_dot_fixed<5>(lefts, right, n, out);
    case 6: return multi_dot_fixed<6>(lefts, right, n, out);
    case 7: return multi_dot_fixed<7>(lefts, right, n, out);
    default: return multi_dot_fixed<8>(lefts, right, n, out);
  }
}

void hadamard_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

}  // namespace

extern const KernelTable kAvx2Table;
const KernelTable kAvx2Table{Isa::avx2, "avx2", dot_avx2, axpy_avx2, multi_dot_avx2,
                             hadamard_avx2};

}  // namespace sprinter::simd
