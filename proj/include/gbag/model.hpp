#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gbag/covariance.hpp"
#include "gbag/dagbag.hpp"
#include "gbag/domain.hpp"
#include "gbag/node_factor.hpp"

namespace gbag {

struct RegressionParams {
  Eigen::VectorXd beta;
  double tau2 = 1.0;
};

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
  bool fixed() const { return lo == hi; }
};

struct Priors {
  Eigen::VectorXd mu_beta;
  Eigen::MatrixXd V_beta;
  double a_tau = 2.0;
  double b_tau = 0.1;
  double a_sigma = 2.0;
  double b_sigma = 1.0;
  Bounds a{4.0, 8.0};
  Bounds c{0.158, 0.789};
  Bounds kappa{0.0, 1.0};
  double alpha = 0.25;

  /// N(0, 100 I) for beta; remaining defaults as declared above.
  static Priors defaults(int p);
  void validate(int p) const;
  bool in_box(const CovarianceParams& theta) const;
};

struct ModelState {
  Eigen::VectorXd w_S;
  Eigen::VectorXd w_U;
  std::vector<int> z;
  MixtureWeights pi;
  Eigen::VectorXd beta;
  double tau2 = 1.0;
  CovarianceParams theta;
};

struct LogJointTerms {
  double likelihood = 0.0;
  double w_reference = 0.0;
  double w_nonreference = 0.0;
  double membership = 0.0;
  double mixture_weights = 0.0;
  double beta_prior = 0.0;
  double tau2_prior = 0.0;
  double sigma2_prior = 0.0;
  double theta_prior = 0.0;

  double total() const;
  /// Throws NumericalError naming the first non-finite term.
  void check_finite() const;
};

/// Observed rows of both groups, aligned.
struct ObservedView {
  std::vector<int> ref_rows;     // indices into the reference group
  std::vector<int> nonref_rows;  // indices into the non-reference group
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  int n() const { return static_cast<int>(y.size()); }
};
ObservedView observed_view(const PartitionedData& data);
/// y - X beta - w over observed rows.
Eigen::VectorXd observed_residual(const ObservedView& obs, const ModelState& state);

/// Parent values stacked in factor column order ([own,] sp, tp).
Eigen::VectorXd gather_parent_values(const NodeFactor& f, const PartitionedData& data, const Eigen::VectorXd& w_S,
                                     bool with_own);

/// Quadratic form e^T R^{-1} e (unit variance) of partition i's references given parents.
double ref_quadratic(const NodeFactor& f, const PartitionedData& data, const Eigen::VectorXd& w_S, int i);
/// Residual e_u and conditional mean of one non-reference point of partition i.
double nonref_mean(const NodeFactor& f, const PartitionedData& data, const Eigen::VectorXd& w_S, int u_local);

struct LatentTerms {
  double log_density = 0.0;  // full Gaussian log density
  double quad = 0.0;         // unit-variance quadratic form
  double logdet = 0.0;       // unit-variance log determinant
  int count = 0;
};
/// Latent log density of partition i's references and non-references under factor f.
LatentTerms partition_latent_terms(const NodeFactor& f, const PartitionedData& data, const ModelState& state, int i,
                                   bool include_reference = true, bool include_nonreference = true);

LogJointTerms log_joint_terms(const ModelState& state, const PartitionedData& data, const DirectionBag& bag,
                              const Priors& priors, const FactorCache* cache = nullptr);
double log_joint(const ModelState& state, const PartitionedData& data, const DirectionBag& bag,
                 const Priors& priors, const FactorCache* cache = nullptr);

double log_dirichlet(const Eigen::VectorXd& pi, double alpha);
double log_inv_gamma(double x, double shape, double scale);

/// Calibrated PM2.5 (ug/m3) from a raw sensor reading and relative humidity (%).
double purpleair_calibrate(double pa_cf1, double rh);

}  // namespace gbag
