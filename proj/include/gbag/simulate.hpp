#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gbag/conditional_gp.hpp"
#include "gbag/covariance.hpp"
#include "gbag/dagbag.hpp"
#include "gbag/domain.hpp"

namespace gbag {

struct SimScenario {
  std::string name;
  std::vector<int> grid_counts;     // points per axis (spatial axes then time)
  std::vector<double> lo{0, 0, 0};  // domain box per axis
  std::vector<double> hi{1, 1, 1};
  std::vector<int> partition_dims;  // intervals per axis
  DirectionBag bag;
  std::vector<int> true_z;  // bag index per partition
  CovarianceParams theta;
  Eigen::VectorXd beta;  // size p; empty means no covariates
  double tau2 = 0.01;
  double covariate_var = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimulatedData {
  Dataset data;
  Eigen::VectorXd true_w;  // aligned with data rows
  PartitionScheme scheme;
  DagConfig truth;
};

/// Ancestral sampling along the true DAG, then y = X beta + w + noise.
SimulatedData generate_gbag_data(const SimScenario& scenario, int threads = 1);

/// Fixed-direction Gneiting-Matern generation. With full_lattice the scenario grid is
/// generated as given; `keep_every` then filters it per axis (1 keeps everything).
SimulatedData generate_matern_drift_data(const SimScenario& scenario, const std::vector<int>& keep_every = {},
                                         int threads = 1);

/// Rows whose per-axis grid index is a multiple of keep_every[axis]. No re-simulation.
SimulatedData subsample_lattice(const SimulatedData& full, const std::vector<int>& grid_counts,
                                const std::vector<int>& keep_every);

/// Direction layout CSV with columns t,x,y,direction (partition cell indices).
std::vector<int> read_layout(const std::string& path, const PartitionScheme& scheme, const DirectionBag& bag);
void write_layout(const std::string& path, const std::vector<int>& z, const PartitionScheme& scheme,
                  const DirectionBag& bag);

std::string default_data_dir();

/// Names of the built-in scenarios.
std::vector<std::string> scenario_presets();
/// Throws ConfigError listing valid presets for an unknown name.
SimScenario scenario_preset(const std::string& name, std::uint64_t seed, const std::string& data_dir = "");

struct SurfaceSet {
  std::string name;
  PointSet grid{2};
  Eigen::VectorXd cov;
};

/// Directional mixture surfaces: the 0.5/0.4/0.1 W/NW/N mixture, each single-DAG
/// surface, and the stationary baseline.
std::vector<SurfaceSet> figure2a_surfaces(int threads = 1);

struct DriftCurves {
  std::vector<double> times;
  int ref_index = 14;
  Eigen::VectorXd left;   // G-BAG covariance with (0, 0.5, t)
  Eigen::VectorXd right;  // with (1, 0.5, t)
  Eigen::VectorXd left_stationary;
  Eigen::VectorXd right_stationary;
};
/// All-W DAG over a 3x3x30 lattice with one point per partition.
DriftCurves figure2b_curves(double a = 2.0, int ref_index = 14);

}  // namespace gbag
