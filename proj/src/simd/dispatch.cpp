#include <atomic>
#include <cstdlib>
#include <string_view>

#include "sprinter/simd/kernels.hpp"

namespace sprinter::simd {

#if defined(SPRINTER_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(SPRINTER_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(SPRINTER_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* select_default() noexcept {
  if (const char* env = std::getenv("SPRINTER_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
    if (want == "neon" && neon_kernels()) return neon_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  if (const KernelTable* t = neon_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> table{select_default()};
  return table;
}

}  // namespace

const KernelTable* avx2_kernels() noexcept {
#if defined(SPRINTER_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() noexcept {
#if defined(SPRINTER_HAVE_NEON)
  return &kNeonTable;
#else
  return nullptr;
#endif
}

const KernelTable* find(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return &scalar_kernels();
    case Isa::avx2: return avx2_kernels();
    case Isa::neon: return neon_kernels();
  }
  return nullptr;
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

bool set_active(Isa isa) noexcept {
  const KernelTable* t = find(isa);
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

}  // namespace sprinter::simd
