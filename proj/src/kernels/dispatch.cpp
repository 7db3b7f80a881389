#include <atomic>
#include <cstdlib>
#include <cstring>

#include "gbag/kernels/cov_kernels.hpp"

namespace gbag::kernels {
namespace {

std::atomic<int> g_forced{-1};

Isa detect() {
  const char* env = std::getenv("GBAG_FORCE_SCALAR");
  if (env != nullptr && std::strcmp(env, "0") != 0 && env[0] != '\0') return Isa::kScalar;
  return cpu_supports_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

}  // namespace

bool cpu_supports_avx2() {
#if defined(GBAG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() {
  const int f = g_forced.load(std::memory_order_relaxed);
  if (f >= 0) return static_cast<Isa>(f);
  static const Isa detected = detect();
  return detected;
}

void force_isa(Isa isa) {
  if (isa == Isa::kAvx2 && !cpu_supports_avx2()) isa = Isa::kScalar;
  g_forced.store(static_cast<int>(isa), std::memory_order_relaxed);
}

void reset_isa() { g_forced.store(-1, std::memory_order_relaxed); }

const char* isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

void corr_block(const PointsView& A, const PointsView& B, const CorrParams& p, double* out, std::ptrdiff_t ld) {
#if defined(GBAG_HAVE_AVX2)
  if (p.nu <= 0.0 && active_isa() == Isa::kAvx2) {
    corr_block_avx2(A, B, p, out, ld);
    return;
  }
#endif
  corr_block_scalar(A, B, p, out, ld);
}

}  // namespace gbag::kernels
