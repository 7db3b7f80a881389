#include <immintrin.h>

#include <cmath>

#include "gbag/kernels/cov_kernels.hpp"

namespace gbag::kernels {
namespace {

inline __m256d polevl3(__m256d x, double c0, double c1, double c2) {
  return _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_set1_pd(c0), x, _mm256_set1_pd(c1)), x, _mm256_set1_pd(c2));
}

// Cephes-style exp: range reduction by ln 2 and a (3,4) rational approximation.
inline __m256d exp256(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-708.0);
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  __m256d fx = _mm256_fmadd_pd(x, _mm256_set1_pd(1.4426950408889634073599), _mm256_set1_pd(0.5));
  fx = _mm256_floor_pd(fx);
  x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125E-1), x);
  x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212E-6), x);

  const __m256d xx = _mm256_mul_pd(x, x);
  const __m256d px =
      _mm256_mul_pd(x, polevl3(xx, 1.26177193074810590878E-4, 3.02994407707441961300E-2, 9.99999999999999999910E-1));
  __m256d qx = _mm256_fmadd_pd(_mm256_set1_pd(3.00198505138664455042E-6), xx, _mm256_set1_pd(2.52448340349684104192E-3));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.27265548208155028766E-1));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.00000000000000000009E0));
  __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));

  __m256i n = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(fx));
  n = _mm256_slli_epi64(_mm256_add_epi64(n, _mm256_set1_epi64x(1023)), 52);
  r = _mm256_mul_pd(r, _mm256_castsi256_pd(n));
  return _mm256_andnot_pd(underflow, r);
}

// Cephes-style log for positive normal inputs.
inline __m256d log256(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i exp_bits = _mm256_srli_epi64(bits, 52);
  const __m256d magic = _mm256_set1_pd(4503599627370496.0);  // 2^52
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(exp_bits, _mm256_castpd_si256(magic))), magic);
  e = _mm256_sub_pd(e, _mm256_set1_pd(1022.0));
  const __m256i mant = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                                       _mm256_set1_epi64x(0x3FE0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant);

  const __m256d small = _mm256_cmp_pd(m, _mm256_set1_pd(0.70710678118654752440), _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(small, _mm256_set1_pd(1.0)));
  m = _mm256_add_pd(m, _mm256_and_pd(small, m));
  m = _mm256_sub_pd(m, _mm256_set1_pd(1.0));

  const __m256d z = _mm256_mul_pd(m, m);
  __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(1.01875663804580931796E-4), m, _mm256_set1_pd(4.97494994976747001425E-1));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(4.70579119878881725854E0));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(1.44989225341610930846E1));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(1.79368678507819816313E1));
  p = _mm256_fmadd_pd(p, m, _mm256_set1_pd(7.70838733755885391666E0));
  __m256d q = _mm256_add_pd(m, _mm256_set1_pd(1.12873587189167450590E1));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(4.52279145837532221105E1));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(8.29875266912776603211E1));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(7.11544750618563894466E1));
  q = _mm256_fmadd_pd(q, m, _mm256_set1_pd(2.31251620126765340583E1));

  __m256d y = _mm256_mul_pd(m, _mm256_div_pd(_mm256_mul_pd(z, p), q));
  y = _mm256_fnmadd_pd(e, _mm256_set1_pd(2.121944400546905827679e-4), y);
  y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, y);
  __m256d r = _mm256_add_pd(m, y);
  return _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), r);
}

struct Lanes {
  __m256d axes[kMaxSpatialDim];
  __m256d t;
};

inline __m256d corr4(const Lanes& a, const double* bcoord, double bt, int d, const CorrParams& p) {
  __m256d ss = _mm256_setzero_pd();
  for (int k = 0; k < d; ++k) {
    const __m256d diff = _mm256_sub_pd(a.axes[k], _mm256_set1_pd(bcoord[k]));
    ss = _mm256_fmadd_pd(diff, diff, ss);
  }
  const __m256d dist = _mm256_sqrt_pd(ss);
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d au = _mm256_andnot_pd(sign_mask, _mm256_sub_pd(a.t, _mm256_set1_pd(bt)));
  const __m256d denom = _mm256_fmadd_pd(_mm256_set1_pd(p.a), au, _mm256_set1_pd(1.0));
  __m256d x = _mm256_mul_pd(_mm256_set1_pd(p.c), dist);
  if (p.kappa != 0.0) {
    x = _mm256_mul_pd(x, exp256(_mm256_mul_pd(_mm256_set1_pd(-0.5 * p.kappa), log256(denom))));
  }
  return _mm256_div_pd(exp256(_mm256_sub_pd(_mm256_setzero_pd(), x)), denom);
}

}  // namespace

void corr_block_avx2(const PointsView& A, const PointsView& B, const CorrParams& p, double* out,
                     std::ptrdiff_t ld) {
  const int d = A.dim;
  const std::size_t full = A.n / 4 * 4;
  double bc[kMaxSpatialDim];
  for (std::size_t j = 0; j < B.n; ++j) {
    double* col = out + static_cast<std::ptrdiff_t>(j) * ld;
    for (int k = 0; k < d; ++k) bc[k] = B.axes[k][j];
    const double bt = B.times[j];
    std::size_t i = 0;
    for (; i < full; i += 4) {
      Lanes lanes;
      for (int k = 0; k < d; ++k) lanes.axes[k] = _mm256_loadu_pd(A.axes[k] + i);
      lanes.t = _mm256_loadu_pd(A.times + i);
      _mm256_storeu_pd(col + i, corr4(lanes, bc, bt, d, p));
    }
    if (i < A.n) {
      // Pad the tail so every entry goes through the same arithmetic.
      alignas(32) double buf[kMaxSpatialDim + 1][4] = {};
      const std::size_t rem = A.n - i;
      for (std::size_t r = 0; r < rem; ++r) {
        for (int k = 0; k < d; ++k) buf[k][r] = A.axes[k][i + r];
        buf[kMaxSpatialDim][r] = A.times[i + r];
      }
      Lanes lanes;
      for (int k = 0; k < d; ++k) lanes.axes[k] = _mm256_load_pd(buf[k]);
      lanes.t = _mm256_load_pd(buf[kMaxSpatialDim]);
      alignas(32) double res[4];
      _mm256_store_pd(res, corr4(lanes, bc, bt, d, p));
      for (std::size_t r = 0; r < rem; ++r) col[i + r] = res[r];
    }
  }
}

}  // namespace gbag::kernels
