#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gbag/config.hpp"
#include "gbag/domain.hpp"
#include "gbag/mcmc.hpp"

namespace gbag::cli {

/// Entry point for the gbag executable; returns the process exit code.
int run(int argc, char** argv);

/// Data as seen by the sampler, rebuilt identically by `fit` and `predict`.
struct PreparedData {
  Dataset full;
  std::vector<int> holdout_rows;  // rows of `full` hidden from the sampler
  std::vector<int> predict_rows;  // rows of `full` with no response
  double response_offset = 0.0;
  PartitionedData data;
};

/// Deterministic choice of round(fraction * n) of the given rows, sorted.
std::vector<int> choose_holdout(const std::vector<int>& rows, double fraction, std::uint64_t seed);
PreparedData prepare_data(const RunConfig& cfg, const Dataset& full);

struct BenchRow {
  int n = 0;
  int partitions = 0;
  int K = 0;
  double ms_per_iter = 0.0;
};
struct BenchResult {
  std::vector<BenchRow> rows;
  double slope = 0.0;  // log-log slope of time against n at the configured bag size
  double r2 = 0.0;
};
/// Times full sampler iterations on synthetic data of each configured size.
BenchResult run_bench(const BenchSpec& spec, const DirectionBag& bag, std::uint64_t seed, int threads);

/// Writes the chain blocks (beta, tau2, theta, z, w samples) to `dir`.
void write_chain(const std::string& dir, const ChainOutput& chain, const PartitionedData& data,
                 const DirectionBag& bag);
/// Reads chain blocks written by write_chain.
ChainOutput read_chain(const std::string& dir, const PartitionedData& data, const DirectionBag& bag);

int cmd_simulate(const RunConfig& cfg);
int cmd_fit(const RunConfig& cfg);
int cmd_predict(const RunConfig& cfg);
int cmd_covsurface(const RunConfig& cfg);
int cmd_bench(const RunConfig& cfg);

}  // namespace gbag::cli
