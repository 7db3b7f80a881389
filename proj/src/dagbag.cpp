#include "gbag/dagbag.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include "gbag/errors.hpp"

namespace gbag {

Direction compass_direction(const std::string& name) {
  static const std::vector<std::pair<std::string, std::vector<int>>> table = {
      {"W", {-1, 0}}, {"E", {1, 0}},  {"N", {0, 1}},    {"S", {0, -1}},
      {"NW", {-1, 1}}, {"NE", {1, 1}}, {"SW", {-1, -1}}, {"SE", {1, -1}}};
  for (const auto& [n, off] : table) {
    if (n == name) return {n, off};
  }
  throw_config("unknown direction '" + name + "' (valid: W, E, N, S, NW, NE, SW, SE)");
}

namespace {

bool half_space_rec(const std::vector<std::vector<int>>& offsets, int depth) {
  if (offsets.empty()) return true;
  if (depth == 0) return false;
  const int d = static_cast<int>(offsets[0].size());
  std::vector<int> v(d, -2);
  while (true) {
    bool nonzero = std::any_of(v.begin(), v.end(), [](int x) { return x != 0; });
    if (nonzero) {
      bool ok = true;
      std::vector<std::vector<int>> tied;
      for (const auto& o : offsets) {
        int dot = 0;
        for (int a = 0; a < d; ++a) dot += v[a] * o[a];
        if (dot > 0) {
          ok = false;
          break;
        }
        if (dot == 0) tied.push_back(o);
      }
      if (ok && tied.size() < offsets.size() && half_space_rec(tied, depth - 1)) return true;
    }
    int a = 0;
    while (a < d && ++v[a] > 2) v[a++] = -2;
    if (a == d) break;
  }
  return false;
}

}  // namespace

bool satisfies_half_space(const std::vector<std::vector<int>>& offsets) {
  if (offsets.empty()) return true;
  for (const auto& o : offsets) {
    if (std::all_of(o.begin(), o.end(), [](int x) { return x == 0; })) return false;
  }
  return half_space_rec(offsets, static_cast<int>(offsets[0].size()));
}

DirectionBag::DirectionBag(std::vector<Direction> directions) : dirs_(std::move(directions)) {
  if (dirs_.empty()) throw_config("direction bag must contain at least one direction");
  const std::size_t d = dirs_[0].offset.size();
  std::vector<std::vector<int>> offsets;
  for (std::size_t h = 0; h < dirs_.size(); ++h) {
    if (dirs_[h].offset.size() != d) throw_config("direction offsets must share one dimension");
    for (std::size_t g = 0; g < h; ++g) {
      if (dirs_[g].offset == dirs_[h].offset || dirs_[g].name == dirs_[h].name) {
        throw_config("duplicate direction '" + dirs_[h].name + "' in bag");
      }
    }
    offsets.push_back(dirs_[h].offset);
  }
  if (!satisfies_half_space(offsets)) {
    throw_config("direction bag violates the half-space condition and could create cycles");
  }
}

DirectionBag DirectionBag::from_names(const std::vector<std::string>& names) {
  std::vector<Direction> dirs;
  for (const auto& n : names) dirs.push_back(compass_direction(n));
  return DirectionBag(std::move(dirs));
}

DirectionBag DirectionBag::preset_w_nw_n_ne() { return from_names({"W", "NW", "N", "NE"}); }

DirectionBag DirectionBag::preset_sw_w_nw_n() { return from_names({"SW", "W", "NW", "N"}); }

int DirectionBag::find(const std::string& name) const {
  for (int h = 0; h < size(); ++h) {
    if (dirs_[h].name == name) return h;
  }
  return -1;
}

int spatial_neighbor(const PartitionScheme& scheme, const Direction& dir, int partition) {
  auto cell = scheme.cell_of(partition);
  const int d = scheme.spatial_dim();
  if (static_cast<int>(dir.offset.size()) != d) throw_config("direction dimension does not match the scheme");
  for (int a = 0; a < d; ++a) cell[a] += dir.offset[a];
  return scheme.index_of(cell);
}

int temporal_neighbor(const PartitionScheme& scheme, int partition) {
  return partition >= scheme.num_spatial_cells() ? partition - scheme.num_spatial_cells() : -1;
}

DagConfig resolve_parents(const PartitionScheme& scheme, const DirectionBag& bag, const std::vector<int>& z) {
  const int M = scheme.num_partitions();
  if (static_cast<int>(z.size()) != M) throw_config("membership vector length must equal M");
  DagConfig cfg;
  cfg.z = z;
  cfg.spatial_parent.resize(M);
  cfg.temporal_parent.resize(M);
  for (int i = 0; i < M; ++i) {
    if (z[i] < 0 || z[i] >= bag.size()) throw_config("membership value out of range");
    cfg.spatial_parent[i] = spatial_neighbor(scheme, bag[z[i]], i);
    cfg.temporal_parent[i] = temporal_neighbor(scheme, i);
  }
  return cfg;
}

std::vector<std::vector<int>> children_of(const DagConfig& config) {
  std::vector<std::vector<int>> ch(config.size());
  for (int i = 0; i < config.size(); ++i) {
    if (config.spatial_parent[i] >= 0) ch[config.spatial_parent[i]].push_back(i);
    if (config.temporal_parent[i] >= 0) ch[config.temporal_parent[i]].push_back(i);
  }
  return ch;
}

namespace {

std::vector<int> kahn(const DagConfig& config) {
  const int M = config.size();
  std::vector<int> indeg(M, 0);
  for (int i = 0; i < M; ++i) {
    indeg[i] = (config.spatial_parent[i] >= 0) + (config.temporal_parent[i] >= 0);
    if (config.spatial_parent[i] >= 0 && config.spatial_parent[i] == config.temporal_parent[i]) indeg[i] = 1;
  }
  auto ch = children_of(config);
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int i = 0; i < M; ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<int> order;
  order.reserve(M);
  while (!ready.empty()) {
    int i = ready.top();
    ready.pop();
    order.push_back(i);
    int prev = -1;
    for (int j : ch[i]) {
      if (j == prev) continue;  // same parent listed as both spatial and temporal
      prev = j;
      if (--indeg[j] == 0) ready.push(j);
    }
  }
  return order;
}

}  // namespace

bool check_acyclic(const DagConfig& config) { return static_cast<int>(kahn(config).size()) == config.size(); }

std::vector<int> topological_order(const DagConfig& config) {
  auto order = kahn(config);
  if (static_cast<int>(order.size()) != config.size()) throw_numerical("cycle detected in DAG configuration");
  return order;
}

std::vector<std::pair<int, int>> precision_sparsity(const DagConfig& config) {
  std::set<std::pair<int, int>> s;
  for (int i = 0; i < config.size(); ++i) {
    s.insert({i, i});
    const int sp = config.spatial_parent[i], tp = config.temporal_parent[i];
    for (int p : {sp, tp}) {
      if (p >= 0) {
        s.insert({i, p});
        s.insert({p, i});
      }
    }
    if (sp >= 0 && tp >= 0) {
      s.insert({sp, tp});
      s.insert({tp, sp});
    }
  }
  return {s.begin(), s.end()};
}

BagEnumerator::BagEnumerator(int K, int M, double guard) : K_(K), z_(M, 0) {
  if (K < 1 || M < 0) throw_config("enumeration needs K >= 1 and M >= 0");
  if (M * std::log(static_cast<double>(K)) > std::log(guard) + 1e-12) {
    throw_config("bag enumeration exceeds the K^M guard");
  }
  count_ = 1;
}

void BagEnumerator::next() {
  std::size_t i = 0;
  while (i < z_.size()) {
    if (++z_[i] < K_) break;
    z_[i++] = 0;
  }
  if (i == z_.size()) {
    done_ = true;
  } else {
    ++count_;
  }
}

std::vector<std::vector<int>> enumerate_bag_dags(int K, int M, double guard) {
  std::vector<std::vector<int>> out;
  for (BagEnumerator e(K, M, guard); !e.done(); e.next()) out.push_back(e.current());
  return out;
}

MixtureWeights MixtureWeights::uniform(int M, int K, double alpha) {
  MixtureWeights w;
  w.pi = Eigen::MatrixXd::Constant(M, K, 1.0 / K);
  w.alpha = alpha;
  return w;
}

bool MixtureWeights::on_simplex(double tol) const {
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    if ((pi.row(i).array() < 0.0).any()) return false;
    if (std::abs(pi.row(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

double MixtureWeights::config_probability(const std::vector<int>& z) const {
  double p = 1.0;
  for (std::size_t i = 0; i < z.size(); ++i) p *= pi(static_cast<Eigen::Index>(i), z[i]);
  return p;
}

}  // namespace gbag
