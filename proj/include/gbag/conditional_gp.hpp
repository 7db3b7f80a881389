#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gbag/covariance.hpp"
#include "gbag/dagbag.hpp"
#include "gbag/node_factor.hpp"
#include "gbag/rng.hpp"

namespace gbag {

/// The G-BAG process conditional on one membership vector z. Reference points must be
/// grouped by partition (as in PartitionedData).
class ConditionalGp {
 public:
  ConditionalGp(const PartitionScheme& scheme, const DirectionBag& bag, const PointSet& ref_points,
                const std::vector<int>& ref_offset, const std::vector<int>& z, const CovarianceParams& params,
                int threads = 1);

  int k() const { return static_cast<int>(refs_->size()); }
  const DagConfig& config() const { return config_; }
  const std::vector<int>& order() const { return order_; }
  const NodeFactor& factor(int i) const { return factors_[i]; }
  const CovarianceParams& params() const { return params_; }

  /// Global reference indices addressed by the columns of factor(i).H.
  std::vector<int> parent_indices(int i) const;

  /// C~ v computed as (I-H)^{-1} R (I-H)^{-T} v.
  Eigen::VectorXd apply_cov(const Eigen::VectorXd& v) const;
  Eigen::MatrixXd dense_cov() const;
  Eigen::SparseMatrix<double> precision() const;
  /// Factorized log density of w_S.
  double log_density(const Eigen::VectorXd& w) const;
  /// Ancestral draw of w_S in topological order.
  Eigen::VectorXd sample(Rng& rng) const;

  /// Linear representation of w(l): coef^T w_S + independent N(0, resid).
  struct Embedding {
    std::vector<int> idx;
    std::vector<double> coef;
    double resid = 0.0;
    bool is_reference = false;
  };
  Embedding embed(const Location& loc) const;
  /// Embeddings for many points, factorizing each partition once.
  std::vector<Embedding> embed_many(const PointSet& pts) const;

  /// Induced covariance given z between two arbitrary locations.
  double cov(const Location& l1, const Location& l2) const;
  /// Induced covariance between one location and every point of a grid.
  Eigen::VectorXd cov_to_many(const Location& ref, const PointSet& grid) const;

 private:
  Eigen::VectorXd apply_embedding_cov(const Embedding& e) const;
  static double dot(const Embedding& e, const Eigen::VectorXd& v);

  const PartitionScheme* scheme_;
  const PointSet* refs_;
  const std::vector<int>* offset_;
  CovarianceParams params_;
  DagConfig config_;
  std::vector<int> order_;
  std::vector<NodeFactor> factors_;
  LocationIndex index_;
};

/// A finite mixture over membership vectors.
struct WeightedConfig {
  std::vector<int> z;
  double weight = 1.0;
};

struct MixtureSpec {
  std::vector<WeightedConfig> configs;
  bool monte_carlo = false;
};

struct MarginalOptions {
  double guard = 1e6;
  bool allow_monte_carlo = true;
  int mc_samples = 10000;
  std::uint64_t seed = 0;
};

/// Exhaustive enumeration when K^M <= guard, else Monte Carlo over independent z_i ~ pi_i.
MixtureSpec mixture_from_weights(const MixtureWeights& weights, const MarginalOptions& opts = {});
/// Every partition shares one direction; weights are per direction.
MixtureSpec common_direction_mixture(int M, const std::vector<double>& weights);

struct MarginalCov {
  double value = 0.0;
  double std_error = 0.0;
};

struct ProcessContext {
  const PartitionScheme* scheme = nullptr;
  const DirectionBag* bag = nullptr;
  const PointSet* ref_points = nullptr;
  const std::vector<int>* ref_offset = nullptr;
  CovarianceParams params;
  int threads = 1;
};

MarginalCov induced_cov_marginal(const Location& l1, const Location& l2, const ProcessContext& ctx,
                                 const MixtureSpec& mixture);

/// Mixture covariance between a reference location and each grid point.
Eigen::VectorXd cov_surface(const Location& ref, const PointSet& grid, const ProcessContext& ctx,
                            const MixtureSpec& mixture);

/// Base covariance only (no DAG).
Eigen::VectorXd stationary_surface(const Location& ref, const PointSet& grid, const CovarianceParams& params);

}  // namespace gbag
