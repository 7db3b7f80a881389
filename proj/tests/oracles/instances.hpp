#pragma once

// Small random instances expressed both as library structures and as oracle inputs.

#include <random>
#include <string>
#include <vector>

#include "dense_oracle.hpp"
#include "gbag/covariance.hpp"
#include "gbag/dagbag.hpp"
#include "gbag/domain.hpp"

namespace oracle {

inline std::array<int, 2> compass(const std::string& name) {
  if (name == "W") return {-1, 0};
  if (name == "E") return {1, 0};
  if (name == "N") return {0, 1};
  if (name == "S") return {0, -1};
  if (name == "NW") return {-1, 1};
  if (name == "NE") return {1, 1};
  if (name == "SW") return {-1, -1};
  return {1, -1};
}

struct Instance {
  Lattice lat;
  std::vector<std::vector<Pt>> pts;
  std::vector<std::string> names;
  std::vector<std::array<int, 2>> offsets;
  std::vector<int> z;
  Theta th;

  gbag::PartitionScheme scheme;
  gbag::PartitionedData data;
  gbag::DirectionBag bag;
  gbag::CovarianceParams params;

  std::vector<std::vector<int>> parents() const { return oracle::parents(lat, offsets, z, pts); }
};

inline gbag::PartitionScheme unit_scheme(const Lattice& lat) {
  std::vector<std::vector<double>> breaks;
  for (int n : {lat.nx, lat.ny, lat.nt}) {
    std::vector<double> e;
    for (int i = 0; i <= n; ++i) e.push_back(static_cast<double>(i) / n);
    breaks.push_back(e);
  }
  return gbag::PartitionScheme(breaks);
}

/// Finishes the library side from lat, pts, names, z and th. Every point is observed
/// with response y (default zero) so all points become references.
inline void build_library_side(Instance& in, const std::vector<std::vector<double>>* y = nullptr) {
  in.offsets.clear();
  for (const auto& n : in.names) in.offsets.push_back(compass(n));
  in.scheme = unit_scheme(in.lat);
  in.bag = gbag::DirectionBag::from_names(in.names);
  in.params = gbag::CovarianceParams{in.th.a, in.th.c, in.th.kappa, in.th.sigma2, std::nullopt};
  gbag::Dataset ds;
  ds.points = gbag::PointSet(2);
  std::vector<double> yv;
  for (std::size_t i = 0; i < in.pts.size(); ++i) {
    for (std::size_t r = 0; r < in.pts[i].size(); ++r) {
      const auto& p = in.pts[i][r];
      ds.points.push_back(std::vector<double>{p[0], p[1]}, p[2]);
      yv.push_back(y ? (*y)[i][r] : 0.0);
    }
  }
  ds.y = Eigen::Map<Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
  in.data = gbag::split_reference(ds, in.scheme);
}

inline Pt random_point_in(std::mt19937_64& g, const Lattice& lat, int part) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const auto c = lat.cell(part);
  return {(c[0] + u(g)) / lat.nx, (c[1] + u(g)) / lat.ny, (c[2] + u(g)) / lat.nt};
}

/// Random lattice with M <= max_M, 1..max_k points per partition (0 allowed when
/// allow_empty), K <= max_K directions drawn from {W, NW, N, NE}.
inline Instance random_instance(std::mt19937_64& g, int max_M, int max_k, int max_K, bool allow_empty = false) {
  Instance in;
  std::uniform_int_distribution<int> dim(1, 3);
  do {
    in.lat = Lattice{dim(g), dim(g), dim(g)};
  } while (in.lat.size() > max_M);
  std::uniform_int_distribution<int> kd(allow_empty ? 0 : 1, max_k);
  in.pts.resize(in.lat.size());
  for (int i = 0; i < in.lat.size(); ++i) {
    const int k = kd(g);
    for (int r = 0; r < k; ++r) in.pts[i].push_back(random_point_in(g, in.lat, i));
  }
  std::vector<std::string> pool{"W", "NW", "N", "NE"};
  std::shuffle(pool.begin(), pool.end(), g);
  std::uniform_int_distribution<int> Kd(1, max_K);
  in.names.assign(pool.begin(), pool.begin() + Kd(g));
  std::uniform_int_distribution<int> zd(0, static_cast<int>(in.names.size()) - 1);
  for (int i = 0; i < in.lat.size(); ++i) in.z.push_back(zd(g));
  std::uniform_real_distribution<double> ua(0.5, 5.0), uc(0.5, 3.0), uk(0.0, 1.0), us(0.5, 2.0);
  in.th = Theta{ua(g), uc(g), uk(g), us(g)};
  build_library_side(in);
  return in;
}

}  // namespace oracle
