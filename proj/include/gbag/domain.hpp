#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gbag {

inline constexpr int kMaxSpatialDim = 3;

struct Location {
  std::vector<double> coords;
  double time = 0.0;
};

/// Non-owning view of a contiguous range of points (structure of arrays).
struct PointsView {
  int dim = 0;
  std::array<const double*, kMaxSpatialDim> axes{};
  const double* times = nullptr;
  std::size_t n = 0;
};

/// Points stored one array per axis.
class PointSet {
 public:
  explicit PointSet(int dim = 2);

  int dim() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  void reserve(std::size_t n);
  void push_back(const Location& loc);
  void push_back(std::span<const double> coords, double time);
  void append_from(const PointSet& other, std::size_t i);

  double coord(std::size_t i, int axis) const { return axes_[axis][i]; }
  double time(std::size_t i) const { return times_[i]; }
  Location at(std::size_t i) const;

  std::span<const double> axis(int a) const { return axes_[a]; }
  std::span<const double> times() const { return times_; }

  PointsView view() const { return view(0, size()); }
  PointsView view(std::size_t begin, std::size_t end) const;

  PointSet subset(std::span<const int> idx) const;

 private:
  int dim_;
  std::vector<std::vector<double>> axes_;
  std::vector<double> times_;
};

enum class OutOfBounds { kClamp, kError };

/// Axis-parallel tessellation. Axis order is (x1, ..., xd, time). Partition indices
/// run with x1 fastest and time slowest, so the previous time slice is an offset.
class PartitionScheme {
 public:
  PartitionScheme() = default;
  /// breaks[a] holds the interval edges of axis a (spatial axes then time).
  explicit PartitionScheme(std::vector<std::vector<double>> breaks);

  int spatial_dim() const { return static_cast<int>(breaks_.size()) - 1; }
  int num_partitions() const { return num_partitions_; }
  int num_spatial_cells() const { return num_spatial_; }
  const std::vector<int>& grid_dims() const { return dims_; }
  const std::vector<double>& breaks(int axis) const { return breaks_[axis]; }

  int assign(std::span<const double> coords, double time, OutOfBounds policy = OutOfBounds::kClamp) const;
  int assign(const Location& loc, OutOfBounds policy = OutOfBounds::kClamp) const;
  int assign(const PointSet& pts, std::size_t i, OutOfBounds policy = OutOfBounds::kClamp) const;

  /// Per-axis cell indices (spatial axes then time) of a partition.
  std::vector<int> cell_of(int partition) const;
  /// Partition at the given per-axis cell indices, or -1 outside the lattice.
  int index_of(std::span<const int> cell) const;
  int time_slice(int partition) const { return partition / num_spatial_; }

  /// Lower and upper corners of a partition's box.
  std::pair<std::vector<double>, std::vector<double>> box(int partition) const;

 private:
  int axis_interval(int axis, double v, OutOfBounds policy) const;

  std::vector<std::vector<double>> breaks_;
  std::vector<int> dims_;
  int num_partitions_ = 0;
  int num_spatial_ = 0;
};

/// Equal-width breaks spanning the bounding box of the points.
PartitionScheme build_partition(const PointSet& points, std::span<const int> grid_dims);

struct Dataset {
  PointSet points{2};
  Eigen::VectorXd y;  // NaN marks a prediction-only location
  Eigen::MatrixXd X;  // n x p
  int num_covariates() const { return static_cast<int>(X.cols()); }
  std::size_t size() const { return points.size(); }
  bool observed(std::size_t i) const;
};

enum class ReferencePolicy { kObservedAsReference, kExplicitList };

/// Reference and non-reference points grouped by partition.
struct PartitionedData {
  PartitionScheme scheme;
  int p = 0;

  PointSet ref_points{2};
  std::vector<int> ref_offset;  // size M + 1
  std::vector<char> ref_observed;
  Eigen::VectorXd ref_y;
  Eigen::MatrixXd ref_X;
  std::vector<int> ref_source;  // row in the originating dataset

  PointSet nonref_points{2};
  std::vector<int> nonref_offset;
  std::vector<char> nonref_observed;
  Eigen::VectorXd nonref_y;
  Eigen::MatrixXd nonref_X;
  std::vector<int> nonref_source;

  int num_partitions() const { return scheme.num_partitions(); }
  int k() const { return static_cast<int>(ref_points.size()); }
  int k_i(int i) const { return ref_offset[i + 1] - ref_offset[i]; }
  int u_i(int i) const { return nonref_offset[i + 1] - nonref_offset[i]; }
  int num_nonref() const { return static_cast<int>(nonref_points.size()); }
  int n_observed() const;
};

/// Splits a dataset into reference and non-reference sets. Under the default policy the
/// observed rows become references; otherwise `explicit_refs` lists dataset rows.
PartitionedData split_reference(const Dataset& data, const PartitionScheme& scheme,
                                ReferencePolicy policy = ReferencePolicy::kObservedAsReference,
                                std::span<const int> explicit_refs = {},
                                OutOfBounds oob = OutOfBounds::kClamp);

/// Regular grid on [lo, hi] per axis; `counts` is (n_x1, ..., n_xd, n_t). Points are
/// ordered with x1 fastest and time slowest.
PointSet regular_grid(std::span<const int> counts, std::span<const double> lo,
                      std::span<const double> hi);

}  // namespace gbag

#include <unordered_map>

namespace gbag {

/// Exact-coordinate lookup of points; the first occurrence wins for duplicates.
class LocationIndex {
 public:
  LocationIndex() = default;
  explicit LocationIndex(const PointSet& points);
  int find(std::span<const double> coords, double time) const;
  int find(const PointSet& pts, std::size_t i) const;
  int find(const Location& loc) const { return find(loc.coords, loc.time); }

 private:
  struct Key {
    std::array<double, kMaxSpatialDim + 1> v{};
    bool operator==(const Key& o) const { return v == o.v; }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  static Key make_key(std::span<const double> coords, double time);
  std::unordered_map<Key, int, KeyHash> map_;
};

}  // namespace gbag
