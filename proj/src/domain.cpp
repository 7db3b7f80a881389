#include "gbag/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "gbag/errors.hpp"

namespace gbag {

PointSet::PointSet(int dim) : dim_(dim), axes_(dim) {
  if (dim < 1 || dim > kMaxSpatialDim) {
    throw_config("spatial dimension must be in [1, " + std::to_string(kMaxSpatialDim) + "]");
  }
}

void PointSet::reserve(std::size_t n) {
  for (auto& a : axes_) a.reserve(n);
  times_.reserve(n);
}

void PointSet::push_back(std::span<const double> coords, double time) {
  if (static_cast<int>(coords.size()) != dim_) throw_config("location has wrong dimension");
  for (double v : coords) {
    if (!std::isfinite(v)) throw_config("non-finite coordinate");
  }
  if (!std::isfinite(time)) throw_config("non-finite time coordinate");
  for (int a = 0; a < dim_; ++a) axes_[a].push_back(coords[a]);
  times_.push_back(time);
}

void PointSet::push_back(const Location& loc) { push_back(loc.coords, loc.time); }

void PointSet::append_from(const PointSet& other, std::size_t i) {
  for (int a = 0; a < dim_; ++a) axes_[a].push_back(other.axes_[a][i]);
  times_.push_back(other.times_[i]);
}

Location PointSet::at(std::size_t i) const {
  Location loc;
  loc.coords.resize(dim_);
  for (int a = 0; a < dim_; ++a) loc.coords[a] = axes_[a][i];
  loc.time = times_[i];
  return loc;
}

PointsView PointSet::view(std::size_t begin, std::size_t end) const {
  PointsView v;
  v.dim = dim_;
  for (int a = 0; a < dim_; ++a) v.axes[a] = axes_[a].data() + begin;
  v.times = times_.data() + begin;
  v.n = end - begin;
  return v;
}

PointSet PointSet::subset(std::span<const int> idx) const {
  PointSet out(dim_);
  out.reserve(idx.size());
  for (int i : idx) out.append_from(*this, static_cast<std::size_t>(i));
  return out;
}

PartitionScheme::PartitionScheme(std::vector<std::vector<double>> breaks) : breaks_(std::move(breaks)) {
  if (breaks_.size() < 2) throw_config("partition scheme needs at least one spatial axis and time");
  num_partitions_ = 1;
  for (const auto& b : breaks_) {
    if (b.size() < 2) throw_config("each axis needs at least two break points");
    for (std::size_t j = 1; j < b.size(); ++j) {
      if (!(b[j] > b[j - 1])) throw_config("break vectors must be strictly increasing");
    }
    dims_.push_back(static_cast<int>(b.size()) - 1);
    num_partitions_ *= dims_.back();
  }
  num_spatial_ = num_partitions_ / dims_.back();
}

int PartitionScheme::axis_interval(int axis, double v, OutOfBounds policy) const {
  const auto& b = breaks_[axis];
  if (v < b.front() || v > b.back()) {
    if (policy == OutOfBounds::kError) throw_config("location outside the partition bounding box");
    v = std::clamp(v, b.front(), b.back());
  }
  // Half-open [lo, hi), last interval closed.
  auto it = std::upper_bound(b.begin(), b.end(), v);
  int j = static_cast<int>(it - b.begin()) - 1;
  return std::clamp(j, 0, dims_[axis] - 1);
}

int PartitionScheme::assign(std::span<const double> coords, double time, OutOfBounds policy) const {
  const int d = spatial_dim();
  if (static_cast<int>(coords.size()) != d) throw_config("location has wrong dimension");
  int idx = axis_interval(d, time, policy);
  for (int a = d - 1; a >= 0; --a) idx = idx * dims_[a] + axis_interval(a, coords[a], policy);
  return idx;
}

int PartitionScheme::assign(const Location& loc, OutOfBounds policy) const {
  return assign(loc.coords, loc.time, policy);
}

int PartitionScheme::assign(const PointSet& pts, std::size_t i, OutOfBounds policy) const {
  std::array<double, kMaxSpatialDim> c{};
  for (int a = 0; a < pts.dim(); ++a) c[a] = pts.coord(i, a);
  return assign(std::span<const double>(c.data(), pts.dim()), pts.time(i), policy);
}

std::vector<int> PartitionScheme::cell_of(int partition) const {
  std::vector<int> cell(dims_.size());
  int r = partition;
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    cell[a] = r % dims_[a];
    r /= dims_[a];
  }
  return cell;
}

int PartitionScheme::index_of(std::span<const int> cell) const {
  int idx = 0;
  for (std::size_t a = dims_.size(); a-- > 0;) {
    if (cell[a] < 0 || cell[a] >= dims_[a]) return -1;
    idx = idx * dims_[a] + cell[a];
  }
  return idx;
}

std::pair<std::vector<double>, std::vector<double>> PartitionScheme::box(int partition) const {
  auto cell = cell_of(partition);
  std::vector<double> lo(cell.size()), hi(cell.size());
  for (std::size_t a = 0; a < cell.size(); ++a) {
    lo[a] = breaks_[a][cell[a]];
    hi[a] = breaks_[a][cell[a] + 1];
  }
  return {lo, hi};
}

PartitionScheme build_partition(const PointSet& points, std::span<const int> grid_dims) {
  if (points.empty()) throw_config("cannot partition an empty location set");
  const int d = points.dim();
  if (static_cast<int>(grid_dims.size()) != d + 1) {
    throw_config("grid_dims must list one count per spatial axis plus time");
  }
  std::vector<std::vector<double>> breaks(d + 1);
  for (int a = 0; a <= d; ++a) {
    if (grid_dims[a] < 1) throw_config("grid_dims entries must be >= 1");
    auto vals = a < d ? points.axis(a) : points.times();
    auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    double lo = *mn, hi = *mx;
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw_config("non-finite coordinate");
    if (hi <= lo) {
      // Degenerate axis: widen so break vectors stay strictly increasing.
      lo -= 0.5;
      hi += 0.5;
    }
    auto& b = breaks[a];
    b.resize(grid_dims[a] + 1);
    for (int j = 0; j <= grid_dims[a]; ++j) b[j] = lo + (hi - lo) * j / grid_dims[a];
    b.back() = hi;
  }
  return PartitionScheme(std::move(breaks));
}

bool Dataset::observed(std::size_t i) const { return i < static_cast<std::size_t>(y.size()) && !std::isnan(y[i]); }

int PartitionedData::n_observed() const {
  int n = 0;
  for (char o : ref_observed) n += o;
  for (char o : nonref_observed) n += o;
  return n;
}

namespace {

void fill_group(const Dataset& data, const PartitionScheme& scheme, const std::vector<int>& rows,
                const std::vector<int>& part, PointSet& pts, std::vector<int>& offset,
                std::vector<char>& observed, Eigen::VectorXd& y, Eigen::MatrixXd& X,
                std::vector<int>& source) {
  const int M = scheme.num_partitions();
  std::vector<int> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return part[a] < part[b]; });

  pts = PointSet(data.points.dim());
  pts.reserve(rows.size());
  offset.assign(M + 1, 0);
  observed.resize(rows.size());
  y.resize(static_cast<Eigen::Index>(rows.size()));
  X.resize(static_cast<Eigen::Index>(rows.size()), data.X.cols());
  source.resize(rows.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const int row = rows[order[r]];
    pts.append_from(data.points, row);
    offset[part[order[r]] + 1]++;
    observed[r] = data.observed(row);
    y[r] = data.observed(row) ? data.y[row] : std::numeric_limits<double>::quiet_NaN();
    if (data.X.cols() > 0) X.row(r) = data.X.row(row);
    source[r] = row;
  }
  std::partial_sum(offset.begin(), offset.end(), offset.begin());
}

}  // namespace

PartitionedData split_reference(const Dataset& data, const PartitionScheme& scheme, ReferencePolicy policy,
                                std::span<const int> explicit_refs, OutOfBounds oob) {
  const int n = static_cast<int>(data.size());
  if (data.X.rows() != n && !(data.X.rows() == 0 && data.X.cols() == 0)) {
    throw_config("covariate matrix row count does not match locations");
  }
  if (data.y.size() != n) throw_config("response vector length does not match locations");

  std::vector<char> is_ref(n, 0);
  if (policy == ReferencePolicy::kObservedAsReference) {
    for (int i = 0; i < n; ++i) is_ref[i] = data.observed(i);
  } else {
    for (int r : explicit_refs) {
      if (r < 0 || r >= n) throw_config("explicit reference index out of range");
      if (is_ref[r]) throw_config("explicit reference list contains duplicates");
      is_ref[r] = 1;
    }
  }

  std::vector<int> ref_rows, nonref_rows, ref_part, nonref_part;
  for (int i = 0; i < n; ++i) {
    const int part = scheme.assign(data.points, i, oob);
    if (is_ref[i]) {
      ref_rows.push_back(i);
      ref_part.push_back(part);
    } else {
      nonref_rows.push_back(i);
      nonref_part.push_back(part);
    }
  }

  PartitionedData out;
  out.scheme = scheme;
  out.p = static_cast<int>(data.X.cols());
  fill_group(data, scheme, ref_rows, ref_part, out.ref_points, out.ref_offset, out.ref_observed, out.ref_y,
             out.ref_X, out.ref_source);
  fill_group(data, scheme, nonref_rows, nonref_part, out.nonref_points, out.nonref_offset, out.nonref_observed,
             out.nonref_y, out.nonref_X, out.nonref_source);
  return out;
}

PointSet regular_grid(std::span<const int> counts, std::span<const double> lo, std::span<const double> hi) {
  const int d = static_cast<int>(counts.size()) - 1;
  PointSet pts(d);
  std::size_t total = 1;
  for (int c : counts) total *= static_cast<std::size_t>(c);
  pts.reserve(total);
  std::vector<int> idx(counts.size(), 0);
  std::vector<double> coords(d);
  auto value = [&](int a) {
    return counts[a] == 1 ? lo[a] : lo[a] + (hi[a] - lo[a]) * idx[a] / (counts[a] - 1);
  };
  for (std::size_t r = 0; r < total; ++r) {
    for (int a = 0; a < d; ++a) coords[a] = value(a);
    pts.push_back(coords, value(d));
    for (std::size_t a = 0; a < counts.size(); ++a) {
      if (++idx[a] < counts[a]) break;
      idx[a] = 0;
    }
  }
  return pts;
}

}  // namespace gbag

namespace gbag {

std::size_t LocationIndex::KeyHash::operator()(const Key& k) const {
  std::size_t h = 1469598103934665603ULL;
  for (double d : k.v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    h = (h ^ bits) * 1099511628211ULL;
  }
  return h;
}

LocationIndex::Key LocationIndex::make_key(std::span<const double> coords, double time) {
  Key k;
  for (std::size_t a = 0; a < coords.size(); ++a) k.v[a] = coords[a] + 0.0;  // folds -0.0
  k.v[kMaxSpatialDim] = time + 0.0;
  return k;
}

LocationIndex::LocationIndex(const PointSet& points) {
  map_.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::array<double, kMaxSpatialDim> c{};
    for (int a = 0; a < points.dim(); ++a) c[a] = points.coord(i, a);
    map_.emplace(make_key(std::span<const double>(c.data(), points.dim()), points.time(i)), static_cast<int>(i));
  }
}

int LocationIndex::find(std::span<const double> coords, double time) const {
  auto it = map_.find(make_key(coords, time));
  return it == map_.end() ? -1 : it->second;
}

int LocationIndex::find(const PointSet& pts, std::size_t i) const {
  std::array<double, kMaxSpatialDim> c{};
  for (int a = 0; a < pts.dim(); ++a) c[a] = pts.coord(i, a);
  return find(std::span<const double>(c.data(), pts.dim()), pts.time(i));
}

}  // namespace gbag
