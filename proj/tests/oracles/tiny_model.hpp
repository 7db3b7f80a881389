#pragma once

// Small hierarchical-model instance shared by the model and sampler tests.

#include <algorithm>
#include <numeric>
#include <random>

#include "gbag/model.hpp"
#include "instances.hpp"

namespace oracle {

using namespace gbag;

struct Tiny {
  oracle::Instance in;
  std::vector<oracle::Pt> upts;
  std::vector<int> upart;
  PartitionedData data;
  ModelState state;
  Priors priors = Priors::defaults(1);
};

/// Instance with one covariate, observed references and unobserved extra points.
inline Tiny make_tiny(std::uint64_t seed, int n_u) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n01;
  Tiny t;
  t.in = oracle::random_instance(g, 4, 3, 2);
  Dataset ds;
  ds.points = PointSet(2);
  std::vector<double> y, x;
  for (std::size_t i = 0; i < t.in.pts.size(); ++i) {
    for (const auto& p : t.in.pts[i]) {
      ds.points.push_back(std::vector<double>{p[0], p[1]}, p[2]);
      y.push_back(n01(g));
      x.push_back(n01(g));
    }
  }
  std::uniform_int_distribution<int> pd(0, t.in.lat.size() - 1);
  for (int q = 0; q < n_u; ++q) {
    t.upart.push_back(pd(g));
    t.upts.push_back(oracle::random_point_in(g, t.in.lat, t.upart.back()));
    ds.points.push_back(std::vector<double>{t.upts.back()[0], t.upts.back()[1]}, t.upts.back()[2]);
    y.push_back(std::nan(""));
    x.push_back(n01(g));
  }
  ds.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  ds.X = Eigen::Map<Eigen::MatrixXd>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  t.data = split_reference(ds, t.in.scheme);
  // Unobserved points are listed by partition; keep the oracle in the same order.
  std::vector<int> order(n_u);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return t.upart[a] < t.upart[b]; });
  std::vector<oracle::Pt> up;
  std::vector<int> upp;
  for (int o : order) {
    up.push_back(t.upts[o]);
    upp.push_back(t.upart[o]);
  }
  t.upts = up;
  t.upart = upp;

  const int M = t.in.lat.size(), K = t.in.bag.size();
  t.state.w_S = Eigen::VectorXd(t.data.k());
  for (Eigen::Index i = 0; i < t.state.w_S.size(); ++i) t.state.w_S[i] = n01(g);
  t.state.w_U = Eigen::VectorXd(n_u);
  for (Eigen::Index i = 0; i < n_u; ++i) t.state.w_U[i] = n01(g);
  t.state.z = t.in.z;
  t.state.pi = MixtureWeights::uniform(M, K, 0.25);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int i = 0; i < M; ++i) {
    double s = 0.0;
    for (int h = 0; h < K; ++h) s += (t.state.pi.pi(i, h) = u(g));
    t.state.pi.pi.row(i) /= s;
  }
  t.state.beta = Eigen::VectorXd::Constant(1, 0.7);
  t.state.tau2 = 0.3;
  t.state.theta = t.in.params;
  t.priors.a = {0.1, 10.0};
  t.priors.c = {0.1, 10.0};
  return t;
}

}  // namespace oracle
