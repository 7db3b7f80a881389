#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gbag/errors.hpp"
#include "gbag/predict.hpp"
#include "instances.hpp"

using namespace gbag;

namespace {

// A chain made of S copies of one state on an instance without covariates.
ChainOutput constant_chain(const oracle::Instance& in, const Eigen::VectorXd& w, double tau2, int S) {
  ChainOutput c;
  PosteriorSample s;
  s.beta = Eigen::VectorXd();
  s.tau2 = tau2;
  s.theta = in.params;
  s.z = in.z;
  s.w_S = w;
  for (int i = 0; i < S; ++i) {
    s.iteration = i;
    c.samples.push_back(s);
  }
  return c;
}

}  // namespace

TEST(Quantile, Type7) {
  std::vector<double> v{10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
  EXPECT_NEAR(quantile_type7(v, 0.025), 1.225, 1e-12);
  EXPECT_NEAR(quantile_type7(v, 0.975), 9.775, 1e-12);
  EXPECT_NEAR(quantile_type7(v, 0.5), 5.5, 1e-12);
  EXPECT_EQ(quantile_type7(v, 0.0), 1.0);
  EXPECT_EQ(quantile_type7(v, 1.0), 10.0);
  EXPECT_EQ(quantile_type7({4.0}, 0.3), 4.0);
}

TEST(Metrics, HandComputed) {
  PredictionResult r;
  r.mean = Eigen::Vector3d(1.0, 2.0, 4.0);
  r.lo95 = Eigen::Vector3d(0.0, 2.5, 3.0);
  r.hi95 = Eigen::Vector3d(2.0, 3.0, 5.0);
  const MetricReport m = compute_metrics(Eigen::Vector3d(1.5, 2.0, 5.0), r);
  EXPECT_NEAR(m.rmspe, std::sqrt((0.25 + 0.0 + 1.0) / 3), 1e-15);
  EXPECT_NEAR(m.mape, 1.5 / 3, 1e-15);
  EXPECT_NEAR(m.ci_coverage_95, 2.0 / 3, 1e-15);  // closed interval includes 5.0
  EXPECT_NEAR(m.ci_width_95, 4.5 / 3, 1e-15);
  EXPECT_THROW(compute_metrics(Eigen::Vector2d(1, 2), r), ConfigError);
}

TEST(Directions, PosteriorFrequenciesAndTies) {
  ChainOutput c;
  for (const auto& z : std::vector<std::vector<int>>{{0, 1}, {1, 1}, {1, 2}, {0, 2}}) {
    PosteriorSample s;
    s.z = z;
    c.samples.push_back(s);
  }
  const DirectionPosterior dp = direction_posterior(c, 3);
  EXPECT_DOUBLE_EQ(dp.prob(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(dp.prob(1, 2), 0.5);
  EXPECT_EQ(dp.mode[0], 0);  // tie between 0 and 1
  EXPECT_EQ(dp.mode[1], 1);  // tie between 1 and 2
}

TEST(Predict, ReferenceLocationsReuseStoredValues) {
  std::mt19937_64 g(1);
  const oracle::Instance in = oracle::random_instance(g, 4, 3, 2);
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(in.data.k(), -1.0, 1.0);
  const ChainOutput c = constant_chain(in, w, 1e-14, 5);
  PredictOptions po;
  po.response_offset = 2.0;
  const PredictionResult r = predict_at(in.data.ref_points, Eigen::MatrixXd(), c, in.data, in.bag, po);
  for (int q = 0; q < in.data.k(); ++q) {
    EXPECT_NEAR(r.mean[q], w[q] + 2.0, 1e-6);
    EXPECT_EQ(r.w_mean[q], w[q]);
  }
}

TEST(Predict, FreshLocationsFollowTheConditionalGaussian) {
  std::mt19937_64 g(2);
  const oracle::Instance in = oracle::random_instance(g, 6, 3, 3);
  std::normal_distribution<double> n01;
  Eigen::VectorXd w(in.data.k());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = n01(g);
  const double tau2 = 0.05;
  const int S = 20000;
  const ChainOutput c = constant_chain(in, w, tau2, S);
  std::vector<oracle::Pt> upts;
  std::vector<int> upart;
  PointSet locs(2);
  for (int i = 0; i < std::min(3, in.lat.size()); ++i) {
    upart.push_back(i);
    upts.push_back(oracle::random_point_in(g, in.lat, i));
    locs.push_back(std::vector<double>{upts.back()[0], upts.back()[1]}, upts.back()[2]);
  }
  const PredictionResult r = predict_at(locs, Eigen::MatrixXd(), c, in.data, in.bag, {});
  const Eigen::MatrixXd J = oracle::joint_cov_with_u(in.pts, in.parents(), upts, upart, in.th);
  const int k = in.data.k();
  const Eigen::MatrixXd Jss = J.topLeftCorner(k, k);
  for (int q = 0; q < static_cast<int>(upts.size()); ++q) {
    const Eigen::VectorXd cross = J.block(k + q, 0, 1, k).transpose();
    const double m = cross.dot(Jss.ldlt().solve(w));
    const double v = J(k + q, k + q) - cross.dot(Jss.ldlt().solve(cross));
    const double sd = std::sqrt(v + tau2);
    EXPECT_NEAR(r.mean[q], m, 4 * sd / std::sqrt(S));
    EXPECT_NEAR(r.sd[q], sd, 4 * sd / std::sqrt(2.0 * S));
    EXPECT_NEAR(r.w_mean[q], m, 4 * std::sqrt(v / S) + 1e-12);
  }
}

TEST(Predict, DeterministicAcrossThreads) {
  std::mt19937_64 g(3);
  const oracle::Instance in = oracle::random_instance(g, 8, 3, 3);
  const ChainOutput c = constant_chain(in, Eigen::VectorXd::Ones(in.data.k()), 0.1, 50);
  PointSet locs(2);
  for (int i = 0; i < in.lat.size(); ++i) {
    const oracle::Pt p = oracle::random_point_in(g, in.lat, i);
    locs.push_back(std::vector<double>{p[0], p[1]}, p[2]);
  }
  PredictOptions po;
  po.seed = 11;
  po.keep_draws = true;
  const PredictionResult a = predict_at(locs, Eigen::MatrixXd(), c, in.data, in.bag, po);
  po.threads = 4;
  const PredictionResult b = predict_at(locs, Eigen::MatrixXd(), c, in.data, in.bag, po);
  EXPECT_EQ(a.y_draws, b.y_draws);
  EXPECT_EQ(a.lo95, b.lo95);
}

TEST(Predict, RejectsMismatchedCovariates) {
  std::mt19937_64 g(4);
  oracle::Instance in = oracle::random_instance(g, 4, 2, 2);
  in.data.p = 1;
  const ChainOutput c = constant_chain(in, Eigen::VectorXd::Zero(in.data.k()), 0.1, 2);
  EXPECT_THROW(predict_at(in.data.ref_points, Eigen::MatrixXd(), c, in.data, in.bag, {}), ConfigError);
}
