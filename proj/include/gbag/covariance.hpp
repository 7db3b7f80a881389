#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gbag/domain.hpp"
#include "gbag/kernels/cov_kernels.hpp"

namespace gbag {

/// Gneiting space-time covariance parameters; nu selects the Matern variant.
struct CovarianceParams {
  double a = 1.0;
  double c = 1.0;
  double kappa = 0.0;
  double sigma2 = 1.0;
  std::optional<double> nu;

  void validate() const;
  kernels::CorrParams corr() const;
};

double base_cov(double dist, double abs_u, const CovarianceParams& params);
double base_cov(std::span<const double> h, double u, const CovarianceParams& params);

Eigen::MatrixXd cov_block(const PointsView& A, const PointsView& B, const CovarianceParams& params);
Eigen::MatrixXd cov_block(const PointSet& A, const PointSet& B, const CovarianceParams& params);
/// Unit-variance block.
Eigen::MatrixXd corr_block(const PointsView& A, const PointsView& B, const kernels::CorrParams& p);

struct JitterPolicy {
  double start = 1e-10;
  double max = 1e-4;
  double factor = 10.0;
};

/// Lower Cholesky factor of A. On failure adds scale*start*I and escalates by `factor`
/// up to scale*max; throws NumericalError beyond that. Returns the jitter used.
double cholesky_with_jitter(const Eigen::MatrixXd& A, double scale, Eigen::MatrixXd& L,
                            const JitterPolicy& policy = {});

struct CondMoments {
  Eigen::MatrixXd H;
  Eigen::MatrixXd R;
  std::vector<int> parent_index_map;
};

/// Gaussian conditioning of `child` on `parents`; R = C_child when parents is empty.
CondMoments cond_moments(const PointSet& child, const PointSet& parents, const CovarianceParams& params,
                         const JitterPolicy& jitter = {});

}  // namespace gbag
