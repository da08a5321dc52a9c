#include "sprinter/simd/kernels.hpp"

namespace sprinter::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void multi_dot_scalar(const double* const* lefts, std::size_t count, const double* right,
                      std::size_t n, double* out) {
  for (std::size_t c = 0; c < count; ++c) out[c] = dot_scalar(lefts[c], right, n);
}

void hadamard_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

constexpr KernelTable kScalar{Isa::scalar, "scalar", dot_scalar, axpy_scalar, multi_dot_scalar,
                              hadamard_scalar};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace sprinter::simd
