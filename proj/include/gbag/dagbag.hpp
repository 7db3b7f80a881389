#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gbag/domain.hpp"

namespace gbag {

struct Direction {
  std::string name;
  std::vector<int> offset;  // parent cell = child cell + offset, spatial axes only
};

/// Offset for a compass label in 2-D (x1 east, x2 north).
Direction compass_direction(const std::string& name);

class DirectionBag {
 public:
  DirectionBag() = default;
  /// Validates: K >= 1, no duplicates, nonzero offsets, half-space condition.
  explicit DirectionBag(std::vector<Direction> directions);

  static DirectionBag from_names(const std::vector<std::string>& names);
  static DirectionBag preset_w_nw_n_ne();
  static DirectionBag preset_sw_w_nw_n();

  int size() const { return static_cast<int>(dirs_.size()); }
  int spatial_dim() const { return dirs_.empty() ? 0 : static_cast<int>(dirs_[0].offset.size()); }
  const Direction& operator[](int h) const { return dirs_[h]; }
  const std::vector<Direction>& directions() const { return dirs_; }
  /// Index of a direction name, or -1.
  int find(const std::string& name) const;

 private:
  std::vector<Direction> dirs_;
};

/// True when some strict linear order on the lattice makes every offset point from a
/// lower-order cell (parent) to a higher-order cell (child).
bool satisfies_half_space(const std::vector<std::vector<int>>& offsets);

/// Membership vector (0-based direction indices) with resolved parents. -1 marks absence.
struct DagConfig {
  std::vector<int> z;
  std::vector<int> spatial_parent;
  std::vector<int> temporal_parent;

  int size() const { return static_cast<int>(spatial_parent.size()); }
};

DagConfig resolve_parents(const PartitionScheme& scheme, const DirectionBag& bag, const std::vector<int>& z);

/// Spatial parent of `partition` along bag direction h, or -1 at the lattice boundary.
int spatial_neighbor(const PartitionScheme& scheme, const Direction& dir, int partition);
int temporal_neighbor(const PartitionScheme& scheme, int partition);

bool check_acyclic(const DagConfig& config);
/// Kahn ordering with smallest available index first. Throws NumericalError on a cycle.
std::vector<int> topological_order(const DagConfig& config);

/// Sorted block coordinates (i, j) of the moralized graph, both triangles included.
std::vector<std::pair<int, int>> precision_sparsity(const DagConfig& config);

/// Children lists from the resolved parents.
std::vector<std::vector<int>> children_of(const DagConfig& config);

/// Odometer over all K^M membership vectors; throws when K^M exceeds the guard.
class BagEnumerator {
 public:
  BagEnumerator(int K, int M, double guard = 1e6);
  const std::vector<int>& current() const { return z_; }
  bool done() const { return done_; }
  void next();
  long long count() const { return count_; }

 private:
  int K_;
  std::vector<int> z_;
  bool done_ = false;
  long long count_ = 0;
};

std::vector<std::vector<int>> enumerate_bag_dags(int K, int M, double guard = 1e6);

struct MixtureWeights {
  Eigen::MatrixXd pi;  // M x K
  double alpha = 1.0;

  static MixtureWeights uniform(int M, int K, double alpha);
  bool on_simplex(double tol = 1e-12) const;
  /// Prior probability of a full configuration: prod_i pi(i, z_i).
  double config_probability(const std::vector<int>& z) const;
};

}  // namespace gbag
