#include "gbag/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gbag/errors.hpp"

namespace gbag {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

Rng::result_type Rng::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(*this);
}

double Rng::gamma(double shape, double scale) {
  std::gamma_distribution<double> d(shape, scale);
  return d(*this);
}

double Rng::inv_gamma(double shape, double scale) { return 1.0 / gamma(shape, 1.0 / scale); }

Eigen::VectorXd Rng::dirichlet(const Eigen::VectorXd& alpha) {
  Eigen::VectorXd g(alpha.size());
  for (Eigen::Index h = 0; h < alpha.size(); ++h) g[h] = gamma(alpha[h]);
  double total = g.sum();
  if (!(total > 0.0)) {
    // All gammas underflowed for tiny concentrations; fall back to the largest log draw.
    g.setZero();
    Eigen::Index best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (Eigen::Index h = 0; h < alpha.size(); ++h) {
      double v = std::log(uniform()) / alpha[h];
      if (v > best_v) {
        best_v = v;
        best = h;
      }
    }
    g[best] = 1.0;
    total = 1.0;
  }
  return g / total;
}

int Rng::categorical_log(const std::vector<double>& log_weights) {
  if (log_weights.empty()) throw_numerical("categorical draw with no categories");
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(mx)) throw_numerical("categorical draw with all-zero weights");
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - mx);
  double u = uniform() * total;
  for (std::size_t h = 0; h < log_weights.size(); ++h) {
    u -= std::exp(log_weights[h] - mx);
    if (u <= 0.0) return static_cast<int>(h);
  }
  for (std::size_t h = log_weights.size(); h-- > 0;) {
    if (std::isfinite(log_weights[h])) return static_cast<int>(h);
  }
  return 0;
}

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t x = seed;
  std::uint64_t h = splitmix64(x);
  for (std::uint64_t v : {a, b, c}) {
    x = h ^ (v * 0xD6E8FEB86659FD93ULL);
    h = splitmix64(x);
  }
  return h;
}

Rng substream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t partition, Stream stream) {
  return Rng(mix_key(seed, iteration, partition, static_cast<std::uint64_t>(stream)));
}

}  // namespace gbag
