#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gbag/dagbag.hpp"
#include "gbag/domain.hpp"
#include "gbag/mcmc.hpp"
#include "gbag/model.hpp"

namespace gbag {

struct PriorSpec {
  double beta_mean = 0.0;
  double beta_var = 100.0;
  double a_tau = 2.0, b_tau = 0.1;
  double a_sigma = 2.0, b_sigma = 1.0;
  Bounds a{4.0, 8.0};
  Bounds c{0.158, 0.789};
  Bounds kappa{0.0, 1.0};
  double alpha = 0.25;

  Priors build(int p) const;
};

struct BenchSpec {
  std::vector<int> sizes{2000, 4000, 8000, 16000};
  int points_per_partition = 20;
  int time_partitions = 4;
  int iterations = 60;
  int warmup = 20;
  bool compare_k = false;
};

struct RunConfig {
  std::string data_path;
  std::string output_dir = "gbag_out";
  std::vector<int> grid_dims;
  std::vector<std::string> bag{"W", "NW", "N", "NE"};
  PriorSpec priors;
  ChainSettings chain;
  std::optional<double> nu;
  double holdout = 0.0;
  bool center_response = true;
  bool sample_unobserved = false;
  bool export_precision = false;
  OutOfBounds oob = OutOfBounds::kClamp;
  std::string preset;
  bool full_lattice = false;
  std::string predict_locations;
  bool predict_training = false;
  BenchSpec bench;
  std::string raw_json;  // canonical dump used for hashing

  DirectionBag direction_bag() const { return DirectionBag::from_names(bag); }
  std::string hash() const;
};

/// Parses a JSON config; unknown keys are rejected.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
/// Re-serializes the effective config (after overrides).
std::string dump_config(const RunConfig& cfg);

}  // namespace gbag
