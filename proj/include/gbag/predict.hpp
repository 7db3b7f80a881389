#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gbag/dagbag.hpp"
#include "gbag/domain.hpp"
#include "gbag/mcmc.hpp"

namespace gbag {

struct PredictionResult {
  PointSet locations{2};
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd lo95;
  Eigen::VectorXd hi95;
  Eigen::VectorXd w_mean;
  Eigen::MatrixXd y_draws;  // locations x samples, kept on request
  std::size_t size() const { return static_cast<std::size_t>(mean.size()); }
};

struct MetricReport {
  double rmspe = 0.0;
  double mape = 0.0;
  double ci_coverage_95 = 0.0;
  double ci_width_95 = 0.0;
};

struct PredictOptions {
  std::uint64_t seed = 1;
  int threads = 1;
  bool keep_draws = false;
  double response_offset = 0.0;  // added back to every y draw
};

/// Posterior predictive draws of y at arbitrary locations. X_new holds covariates per row.
PredictionResult predict_at(const PointSet& locations, const Eigen::MatrixXd& X_new, const ChainOutput& chain,
                            const PartitionedData& data, const DirectionBag& bag, const PredictOptions& opts = {});

MetricReport compute_metrics(const Eigen::VectorXd& truth, const PredictionResult& result);

struct DirectionPosterior {
  Eigen::MatrixXd prob;   // M x K
  std::vector<int> mode;  // ties resolved toward the lower index
};
DirectionPosterior direction_posterior(const ChainOutput& chain, int K);

/// Type-7 empirical quantile.
double quantile_type7(std::vector<double> values, double prob);

}  // namespace gbag
