#include "gbag/covariance.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "gbag/errors.hpp"

namespace gbag {

void CovarianceParams::validate() const {
  if (!(a > 0.0) || !std::isfinite(a)) throw_config("covariance parameter a must be positive");
  if (!(c > 0.0) || !std::isfinite(c)) throw_config("covariance parameter c must be positive");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw_config("covariance parameter kappa must lie in [0, 1]");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw_config("covariance parameter sigma2 must be positive");
  if (nu && !(*nu > 0.0)) throw_config("Matern smoothness nu must be positive");
}

kernels::CorrParams CovarianceParams::corr() const { return {a, c, kappa, nu.value_or(0.0)}; }

double base_cov(double dist, double abs_u, const CovarianceParams& params) {
  params.validate();
  return params.sigma2 * kernels::corr_scalar(dist, abs_u, params.corr());
}

double base_cov(std::span<const double> h, double u, const CovarianceParams& params) {
  double ss = 0.0;
  for (double v : h) ss += v * v;
  return base_cov(std::sqrt(ss), std::abs(u), params);
}

Eigen::MatrixXd corr_block(const PointsView& A, const PointsView& B, const kernels::CorrParams& p) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(A.n), static_cast<Eigen::Index>(B.n));
  if (A.n > 0 && B.n > 0) kernels::corr_block(A, B, p, out.data(), out.rows());
  return out;
}

Eigen::MatrixXd cov_block(const PointsView& A, const PointsView& B, const CovarianceParams& params) {
  params.validate();
  return params.sigma2 * corr_block(A, B, params.corr());
}

Eigen::MatrixXd cov_block(const PointSet& A, const PointSet& B, const CovarianceParams& params) {
  return cov_block(A.view(), B.view(), params);
}

double cholesky_with_jitter(const Eigen::MatrixXd& A, double scale, Eigen::MatrixXd& L, const JitterPolicy& policy) {
  if (A.rows() == 0) {
    L.resize(0, 0);
    return 0.0;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    L = llt.matrixL();
    return 0.0;
  }
  for (double j = policy.start; j <= policy.max * (1.0 + 1e-9); j *= policy.factor) {
    Eigen::MatrixXd Aj = A;
    Aj.diagonal().array() += j * scale;
    llt.compute(Aj);
    if (llt.info() == Eigen::Success) {
      L = llt.matrixL();
      return j * scale;
    }
  }
  throw_numerical("Cholesky factorization failed after maximum jitter");
}

CondMoments cond_moments(const PointSet& child, const PointSet& parents, const CovarianceParams& params,
                         const JitterPolicy& jitter) {
  params.validate();
  CondMoments m;
  const Eigen::MatrixXd Cc = cov_block(child, child, params);
  m.parent_index_map.resize(parents.size());
  std::iota(m.parent_index_map.begin(), m.parent_index_map.end(), 0);
  if (parents.empty()) {
    m.H.resize(static_cast<Eigen::Index>(child.size()), 0);
    m.R = Cc;
    return m;
  }
  const Eigen::MatrixXd Cp = cov_block(parents, parents, params);
  const Eigen::MatrixXd Ccp = cov_block(child, parents, params);
  Eigen::MatrixXd L;
  cholesky_with_jitter(Cp, params.sigma2, L, jitter);
  // H = Ccp Cp^{-1}
  Eigen::MatrixXd Ht = L.triangularView<Eigen::Lower>().solve(Ccp.transpose());
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(Ht);
  m.H = Ht.transpose();
  m.R = Cc - m.H * Ccp.transpose();
  m.R = 0.5 * (m.R + m.R.transpose());
  return m;
}

}  // namespace gbag
