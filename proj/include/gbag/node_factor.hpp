#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gbag/covariance.hpp"
#include "gbag/dagbag.hpp"
#include "gbag/domain.hpp"

namespace gbag {

/// Reference points grouped by partition (contiguous ranges).
struct RefLayout {
  const PointSet* points = nullptr;
  const std::vector<int>* offset = nullptr;

  int k_i(int i) const { return (*offset)[i + 1] - (*offset)[i]; }
  int begin(int i) const { return (*offset)[i]; }
  PointsView view(int i) const { return points->view((*offset)[i], (*offset)[i + 1]); }
};

/// Correlation-scale conditional moments of one partition given its parents.
/// Reference block: w_i | w_parents ~ N(H w_[sp, tp], sigma2 * R), R = L L^T.
/// Non-reference rows: w_u | w_[own, sp, tp] ~ N(Hu.row(u) w, sigma2 * Ru(u)).
struct NodeFactor {
  int own = -1;
  int sp = -1;  // -1 when absent or empty
  int tp = -1;
  int k = 0;
  int k_sp = 0;
  int k_tp = 0;
  Eigen::MatrixXd H;     // k x (k_sp + k_tp)
  Eigen::MatrixXd L;     // k x k lower
  Eigen::MatrixXd Rinv;  // k x k
  double logdet_R = 0.0;
  Eigen::MatrixXd Hu;  // n_u x (k + k_sp + k_tp)
  Eigen::VectorXd Ru;
  double jitter = 0.0;

  int parent_cols() const { return k_sp + k_tp; }
  /// Column offset of partition j inside H, or -1.
  int ref_col(int j) const { return j == sp && j >= 0 ? 0 : (j == tp && j >= 0 ? k_sp : -1); }
  /// Column offset of partition j inside Hu, or -1.
  int nonref_col(int j) const {
    if (j == own) return 0;
    int c = ref_col(j);
    return c < 0 ? -1 : k + c;
  }
};

/// Builds the factor with one Cholesky of the stacked [sp, tp, own] correlation.
NodeFactor factor_node(const RefLayout& refs, int own, int sp, int tp, const PointsView& u_points,
                       const kernels::CorrParams& corr, const JitterPolicy& jitter = {});

/// Factors for every partition and every bag direction, deduplicated across directions
/// that resolve to the same parent.
class FactorCache {
 public:
  FactorCache() = default;
  FactorCache(const PartitionScheme& scheme, const DirectionBag& bag, RefLayout refs, const PointSet* nonref,
              const std::vector<int>* nonref_offset);

  /// Recomputes all directions, or only the listed per-partition directions when z != nullptr.
  void compute(const kernels::CorrParams& corr, const std::vector<int>* z, int threads,
               const JitterPolicy& jitter = {});
  /// Fills in directions not yet computed for the current parameters.
  void complete(const kernels::CorrParams& corr, int threads, const JitterPolicy& jitter = {});

  const NodeFactor& get(int i, int h) const { return slots_[i][slot_of_[i][h]]; }
  bool ready(int i, int h) const { return valid_[i][slot_of_[i][h]]; }
  int spatial_parent(int i, int h) const { return sp_[i][h]; }
  int temporal_parent(int i) const { return tp_[i]; }
  int num_partitions() const { return static_cast<int>(slots_.size()); }
  int num_directions() const { return K_; }
  /// Number of distinct factors per partition.
  int num_slots(int i) const { return static_cast<int>(slots_[i].size()); }

 private:
  void compute_slots(const std::vector<std::pair<int, int>>& work, const kernels::CorrParams& corr, int threads,
                     const JitterPolicy& jitter);
  PointsView u_view(int i) const;

  RefLayout refs_;
  const PointSet* nonref_ = nullptr;
  const std::vector<int>* nonref_offset_ = nullptr;
  int K_ = 0;
  std::vector<std::vector<int>> sp_;
  std::vector<int> tp_;
  std::vector<std::vector<int>> slot_of_;
  std::vector<std::vector<int>> slot_sp_;
  std::vector<std::vector<NodeFactor>> slots_;
  std::vector<std::vector<char>> valid_;
};

}  // namespace gbag
