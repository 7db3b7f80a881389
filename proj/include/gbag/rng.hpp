#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace gbag {

/// xoshiro256** seeded through SplitMix64. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  double uniform();  // (0, 1)
  double normal();
  double gamma(double shape, double scale = 1.0);
  double inv_gamma(double shape, double scale);
  Eigen::VectorXd dirichlet(const Eigen::VectorXd& alpha);
  /// Draws an index from unnormalized log weights.
  int categorical_log(const std::vector<double>& log_weights);

 private:
  std::uint64_t s_[4];
};

/// Named substreams so that draws never depend on scheduling order.
enum class Stream : std::uint64_t {
  kBeta = 1,
  kTau2,
  kZ,
  kPi,
  kWRef,
  kWNonref,
  kTheta,
  kSigma2,
  kPredict,
  kHoldout,
  kSimulate,
  kInit,
  kCovariates,
  kNoise,
  kUser
};

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

/// Independent generator for (seed, iteration, partition, stream).
Rng substream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t partition, Stream stream);

}  // namespace gbag
