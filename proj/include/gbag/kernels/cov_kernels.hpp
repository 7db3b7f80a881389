#pragma once

#include <cstddef>

#include "gbag/domain.hpp"

namespace gbag::kernels {

/// Correlation-scale parameters (unit marginal variance).
struct CorrParams {
  double a = 1.0;
  double c = 1.0;
  double kappa = 0.0;
  double nu = 0.0;  // 0 selects the exponential family
};

enum class Isa { kScalar, kAvx2 };

/// Column-major |A| x |B| correlation block written to out with leading dimension ld.
using CorrBlockFn = void (*)(const PointsView& A, const PointsView& B, const CorrParams& p, double* out,
                             std::ptrdiff_t ld);

void corr_block_scalar(const PointsView& A, const PointsView& B, const CorrParams& p, double* out,
                       std::ptrdiff_t ld);
#if defined(GBAG_HAVE_AVX2)
void corr_block_avx2(const PointsView& A, const PointsView& B, const CorrParams& p, double* out,
                     std::ptrdiff_t ld);
#endif

/// Scalar correlation at a spatial distance and absolute time lag.
double corr_scalar(double dist, double abs_u, const CorrParams& p);

bool cpu_supports_avx2();
/// Best ISA compiled in and supported by the running CPU, unless forced.
Isa active_isa();
/// Forces an ISA (falls back to scalar when unsupported). GBAG_FORCE_SCALAR=1 also forces scalar.
void force_isa(Isa isa);
void reset_isa();
const char* isa_name(Isa isa);

/// Dispatches to the active ISA. Matern parameters always use the scalar path.
void corr_block(const PointsView& A, const PointsView& B, const CorrParams& p, double* out, std::ptrdiff_t ld);

}  // namespace gbag::kernels
