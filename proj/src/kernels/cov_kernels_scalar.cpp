#include <cmath>

#include "gbag/kernels/cov_kernels.hpp"

namespace gbag::kernels {

double corr_scalar(double dist, double abs_u, const CorrParams& p) {
  const double denom = p.a * abs_u + 1.0;
  const double x = p.c * dist * std::pow(denom, -0.5 * p.kappa);
  if (p.nu <= 0.0) return std::exp(-x) / denom;
  if (x == 0.0) return 1.0 / denom;
  const double nu = p.nu;
  const double norm = std::exp((1.0 - nu) * std::log(2.0) - std::lgamma(nu));
  const double k = std::cyl_bessel_k(nu, x);
  if (!std::isfinite(k) || k == 0.0) return 0.0;
  return norm * std::pow(x, nu) * k / denom;
}

void corr_block_scalar(const PointsView& A, const PointsView& B, const CorrParams& p, double* out,
                       std::ptrdiff_t ld) {
  const int d = A.dim;
  for (std::size_t j = 0; j < B.n; ++j) {
    double* col = out + static_cast<std::ptrdiff_t>(j) * ld;
    for (std::size_t i = 0; i < A.n; ++i) {
      double ss = 0.0;
      for (int a = 0; a < d; ++a) {
        const double diff = A.axes[a][i] - B.axes[a][j];
        ss += diff * diff;
      }
      col[i] = corr_scalar(std::sqrt(ss), std::abs(A.times[i] - B.times[j]), p);
    }
  }
}

}  // namespace gbag::kernels
