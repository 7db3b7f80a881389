#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gbag/model.hpp"
#include "gbag/rng.hpp"

namespace gbag {

enum class WSchedule { kColored, kSequential };

struct ChainSettings {
  int n_iter = 1000;
  int n_burn = 500;
  int thin = 1;
  std::uint64_t seed = 1;
  double target_accept = 0.234;
  double ram_initial_scale = 0.1;
  double ram_decay = 0.6;
  int threads = 1;
  WSchedule schedule = WSchedule::kColored;
  bool update_beta = true;
  bool update_tau2 = true;
  bool update_z = true;
  bool update_pi = true;
  bool update_w = true;
  bool update_theta = true;
  bool update_sigma2 = true;
  bool keep_w = true;
  bool trace_log_joint = true;

  void validate() const;
};

struct PosteriorSample {
  int iteration = 0;
  Eigen::VectorXd beta;
  double tau2 = 0.0;
  CovarianceParams theta;
  std::vector<int> z;
  Eigen::MatrixXd pi;
  Eigen::VectorXd w_S;
  Eigen::VectorXd w_U;
  double log_joint = 0.0;
};

enum class Step { kBeta, kTau2, kZ, kPi, kWRef, kWNonref, kTheta, kSigma2, kCount };
const char* step_name(Step s);

struct IterationDiagnostics {
  int iteration = 0;
  double log_joint = 0.0;
  double theta_accept_rate = 0.0;
  double tau2 = 0.0;
  double sigma2 = 0.0;
};

struct ChainSummary {
  int theta_proposals = 0;
  int theta_accepts = 0;
  double theta_accept_rate() const { return theta_proposals ? double(theta_accepts) / theta_proposals : 0.0; }
  std::array<double, static_cast<int>(Step::kCount)> step_ms{};
  std::vector<IterationDiagnostics> trace;
  double wall_seconds = 0.0;
  Eigen::MatrixXd ram_factor;
};

struct ChainOutput {
  std::vector<PosteriorSample> samples;
  ChainSummary summary;
};

/// Robust adaptive Metropolis: proposal x + S u, u ~ N(0, I), S lower triangular.
class RamAdapter {
 public:
  RamAdapter() = default;
  RamAdapter(int dim, double initial_scale, double target = 0.234, double decay = 0.6);
  int dim() const { return static_cast<int>(S_.rows()); }
  const Eigen::MatrixXd& S() const { return S_; }
  int adaptations() const { return n_; }
  Eigen::VectorXd draw_u(Rng& rng) const;
  /// S S^T <- S (I + eta_n (alpha - target) u u^T / |u|^2) S^T, eta_n = n^{-decay}.
  void adapt(const Eigen::VectorXd& u, double accept_prob);

 private:
  Eigen::MatrixXd S_;
  double target_ = 0.234;
  double decay_ = 0.6;
  int n_ = 0;
};

struct RamStepResult {
  bool accepted = false;
  double accept_prob = 0.0;
};

/// One Metropolis step on x with log target; adapts when requested.
RamStepResult ram_step(Eigen::VectorXd& x, double& log_target_x,
                       const std::function<double(const Eigen::VectorXd&)>& log_target, RamAdapter& ram, Rng& rng,
                       bool adapt);

/// Scaled logit onto the free prior-box coordinates of (a, c, kappa).
struct ThetaLink {
  std::vector<int> free;  // 0 = a, 1 = c, 2 = kappa
  std::array<Bounds, 3> bounds;
  explicit ThetaLink(const Priors& priors);
  Eigen::VectorXd to_eta(const CovarianceParams& theta) const;
  CovarianceParams from_eta(const Eigen::VectorXd& eta, const CovarianceParams& base) const;
  double log_jacobian(const Eigen::VectorXd& eta) const;
};

/// Moral conflict graph over all bag directions, greedily colored.
std::vector<std::vector<int>> color_partitions(const PartitionScheme& scheme, const DirectionBag& bag);

// Individual conditional updates. Each uses the given generator and leaves `state` untouched.
Eigen::VectorXd update_beta(const ModelState& state, const ObservedView& obs, const Priors& priors, Rng& rng);
double update_tau2(const ModelState& state, const ObservedView& obs, const Priors& priors, Rng& rng);
/// Log weights over directions for partition i (unnormalized, includes log pi).
std::vector<double> z_log_weights(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                                  int i);
std::vector<int> update_z(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                          std::uint64_t seed, int iteration, int threads);
MixtureWeights update_pi(const ModelState& state, std::uint64_t seed, int iteration);
/// Draw of w_i; precision and mean exposed for tests through the out-parameters when non-null.
Eigen::VectorXd update_w_partition(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                                   const std::vector<std::vector<int>>& children, int i, Rng& rng,
                                   Eigen::MatrixXd* precision = nullptr, Eigen::VectorXd* mean = nullptr);
Eigen::VectorXd update_w_nonreference(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                                      std::uint64_t seed, int iteration, int threads);
double update_sigma2(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                     const Priors& priors, Rng& rng);

/// Stateful sampler for one chain.
class Sampler {
 public:
  Sampler(const PartitionedData& data, const DirectionBag& bag, const Priors& priors, const ChainSettings& settings,
          const ModelState& init);

  /// Runs steps (a)-(g) for one iteration. `adapt` enables RAM adaptation.
  void iterate(int iteration, bool adapt);
  const ModelState& state() const { return state_; }
  const FactorCache& cache() const { return cache_; }
  const ChainSummary& summary() const { return summary_; }
  ChainSummary& summary() { return summary_; }
  double log_joint() const;
  const RamAdapter& ram() const { return ram_; }

  void step_beta(int it);
  void step_tau2(int it);
  void step_z(int it);
  void step_pi(int it);
  void step_w_reference(int it);
  void step_w_nonreference(int it);
  void step_theta(int it, bool adapt);
  void step_sigma2(int it);

 private:
  double theta_log_target(const FactorCache& cache, const ModelState& s) const;
  std::vector<std::vector<int>> current_children() const;

  const PartitionedData& data_;
  DirectionBag bag_;
  Priors priors_;
  ChainSettings settings_;
  ModelState state_;
  ObservedView obs_;
  FactorCache cache_;
  FactorCache proposal_cache_;
  std::vector<std::vector<int>> colors_;
  ThetaLink link_;
  RamAdapter ram_;
  ChainSummary summary_;
};

/// Default initial state: prior-mean style values, theta at the box centre, random z.
ModelState initial_state(const PartitionedData& data, const DirectionBag& bag, const Priors& priors,
                         std::uint64_t seed);

using SampleSink = std::function<void(const PosteriorSample&)>;

/// Full chain. Samples after burn-in every `thin` iterations go to the output and the sink.
ChainOutput run_chain(const PartitionedData& data, const DirectionBag& bag, const Priors& priors,
                      const ChainSettings& settings, const ModelState* init = nullptr, const SampleSink& sink = {});

}  // namespace gbag
