// AArch64 only; NEON is part of the base ISA there.
#include <arm_neon.h>

#include "sprinter/simd/kernels.hpp"

namespace sprinter::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <std::size_t Count>
void multi_dot_fixed(const double* const* lefts, const double* right, std::size_t n, double* out) {
  float64x2_t acc[Count];
  for (std::size_t c = 0; c < Count; ++c) acc[c] = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t r = vld1q_f64(right + i);
    for (std::size_t c = 0; c < Count; ++c) acc[c] = vfmaq_f64(acc[c], vld1q_f64(lefts[c] + i), r);
  }
  for (std::size_t c = 0; c < Count; ++c) {
    double tail = 0.0;
    for (std::size_t t = i; t < n; ++t) tail += lefts[c][t] * right[t];
    out[c] = vaddvq_f64(acc[c]) + tail;
  }
}

void multi_dot_neon(const double* const* lefts, std::size_t count, const double* right,
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

void hadamard_neon(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

}  // namespace

extern const KernelTable kNeonTable;
const KernelTable kNeonTable{Isa::neon, "neon", dot_neon, axpy_neon, multi_dot_neon, hadamard_neon};

}  // namespace sprinter::simd
