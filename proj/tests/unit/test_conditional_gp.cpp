#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gbag/conditional_gp.hpp"
#include "instances.hpp"

using namespace gbag;

namespace {

ConditionalGp make_gp(const oracle::Instance& in) {
  return ConditionalGp(in.scheme, in.bag, in.data.ref_points, in.data.ref_offset, in.z, in.params);
}

}  // namespace

TEST(ConditionalGp, DenseCovMatchesOracle) {
  std::mt19937_64 g(101);
  for (int rep = 0; rep < 30; ++rep) {
    const oracle::Instance in = oracle::random_instance(g, 8, 3, 3, rep % 2 == 1);
    if (in.data.k() == 0) continue;
    const ConditionalGp gp = make_gp(in);
    const Eigen::MatrixXd want = oracle::dag_cov(in.pts, in.parents(), in.th);
    const Eigen::MatrixXd got = gp.dense_cov();
    ASSERT_EQ(got.rows(), want.rows());
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-9 * want.cwiseAbs().maxCoeff()) << "rep " << rep;
  }
}

TEST(ConditionalGp, LogDensityMatchesDenseGaussian) {
  std::mt19937_64 g(202);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 30; ++rep) {
    const oracle::Instance in = oracle::random_instance(g, 6, 3, 3);
    const ConditionalGp gp = make_gp(in);
    const Eigen::MatrixXd C = oracle::dag_cov(in.pts, in.parents(), in.th);
    Eigen::VectorXd w(in.data.k());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = n01(g);
    EXPECT_NEAR(gp.log_density(w), oracle::mvn_logpdf(w, C), 1e-8);
  }
}

TEST(ConditionalGp, PrecisionIsInverseCovariance) {
  std::mt19937_64 g(303);
  for (int rep = 0; rep < 20; ++rep) {
    const oracle::Instance in = oracle::random_instance(g, 6, 3, 3);
    const ConditionalGp gp = make_gp(in);
    const Eigen::MatrixXd Q = Eigen::MatrixXd(gp.precision());
    const Eigen::MatrixXd Qd = oracle::dag_cov(in.pts, in.parents(), in.th).inverse();
    const double floor = 1e-9 * Qd.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < Q.rows(); ++i)
      for (Eigen::Index j = 0; j < Q.cols(); ++j)
        EXPECT_LE(std::abs(Q(i, j) - Qd(i, j)), 1e-6 * std::max(std::abs(Qd(i, j)), floor));
  }
}

TEST(ConditionalGp, PrecisionSparsityFollowsMoralGraph) {
  std::mt19937_64 g(404);
  const oracle::Instance in = oracle::random_instance(g, 12, 3, 3);
  const ConditionalGp gp = make_gp(in);
  const Eigen::MatrixXd Q = Eigen::MatrixXd(gp.precision());
  const auto pairs = precision_sparsity(gp.config());
  std::set<std::pair<int, int>> allowed(pairs.begin(), pairs.end());
  for (int i = 0; i < in.lat.size(); ++i)
    for (int j = 0; j < in.lat.size(); ++j) {
      if (allowed.count({i, j})) continue;
      for (int r = in.data.ref_offset[i]; r < in.data.ref_offset[i + 1]; ++r)
        for (int s = in.data.ref_offset[j]; s < in.data.ref_offset[j + 1]; ++s) EXPECT_EQ(Q(r, s), 0.0);
    }
}

TEST(ConditionalGp, ApplyCovMatchesDense) {
  std::mt19937_64 g(505);
  std::normal_distribution<double> n01;
  const oracle::Instance in = oracle::random_instance(g, 8, 3, 3);
  const ConditionalGp gp = make_gp(in);
  Eigen::VectorXd v(in.data.k());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n01(g);
  EXPECT_LT((gp.apply_cov(v) - gp.dense_cov() * v).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ConditionalGp, AncestralSamplesHaveDagCovariance) {
  std::mt19937_64 g(606);
  oracle::Instance in = oracle::random_instance(g, 3, 2, 2);
  const ConditionalGp gp = make_gp(in);
  const Eigen::MatrixXd C = gp.dense_cov();
  const int n = 40000, k = in.data.k();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
  Rng rng(77);
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd w = gp.sample(rng);
    acc += w * w.transpose();
  }
  acc /= n;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / n);
      EXPECT_NEAR(acc(i, j), C(i, j), 5 * se);
    }
}

TEST(ConditionalGp, CovBetweenLocationsMatchesJointOracle) {
  std::mt19937_64 g(707);
  for (int rep = 0; rep < 10; ++rep) {
    const oracle::Instance in = oracle::random_instance(g, 6, 3, 3);
    const ConditionalGp gp = make_gp(in);
    std::vector<oracle::Pt> upts;
    std::vector<int> upart;
    std::uniform_int_distribution<int> pd(0, in.lat.size() - 1);
    for (int q = 0; q < 3; ++q) {
      upart.push_back(pd(g));
      upts.push_back(oracle::random_point_in(g, in.lat, upart.back()));
    }
    const Eigen::MatrixXd J = oracle::joint_cov_with_u(in.pts, in.parents(), upts, upart, in.th);
    const int k = in.data.k();
    auto loc = [](const oracle::Pt& p) { return Location{{p[0], p[1]}, p[2]}; };
    for (int q = 0; q < 3; ++q) {
      for (int r = 0; r < 3; ++r) {
        EXPECT_NEAR(gp.cov(loc(upts[q]), loc(upts[r])), J(k + q, k + r), 1e-9);
      }
      const Location ref = in.data.ref_points.at(0);
      EXPECT_NEAR(gp.cov(loc(upts[q]), ref), J(k + q, 0), 1e-9);
    }
    EXPECT_NEAR(gp.cov(in.data.ref_points.at(0), in.data.ref_points.at(k - 1)), J(0, k - 1), 1e-9);
  }
}

TEST(ConditionalGp, CovToManyAgreesWithPairwise) {
  std::mt19937_64 g(808);
  const oracle::Instance in = oracle::random_instance(g, 8, 3, 3);
  const ConditionalGp gp = make_gp(in);
  PointSet grid(2);
  for (int i = 0; i < in.lat.size(); ++i) {
    const oracle::Pt p = oracle::random_point_in(g, in.lat, i);
    grid.push_back(std::vector<double>{p[0], p[1]}, p[2]);
  }
  grid.append_from(in.data.ref_points, 0);
  const Location ref = grid.at(1);
  const Eigen::VectorXd many = gp.cov_to_many(ref, grid);
  for (std::size_t q = 0; q < grid.size(); ++q) EXPECT_NEAR(many[q], gp.cov(ref, grid.at(q)), 1e-12);
}

TEST(Mixture, EnumerationAndCommonDirection) {
  MixtureWeights w = MixtureWeights::uniform(3, 2, 1.0);
  w.pi(0, 0) = 0.9;
  w.pi(0, 1) = 0.1;
  const MixtureSpec spec = mixture_from_weights(w);
  EXPECT_FALSE(spec.monte_carlo);
  EXPECT_EQ(spec.configs.size(), 8u);
  double total = 0.0;
  for (const auto& c : spec.configs) total += c.weight;
  EXPECT_NEAR(total, 1.0, 1e-12);
  const MixtureSpec common = common_direction_mixture(4, {0.5, 0.4, 0.1});
  ASSERT_EQ(common.configs.size(), 3u);
  EXPECT_EQ(common.configs[1].z, (std::vector<int>{1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(common.configs[2].weight, 0.1);
}

TEST(Mixture, MarginalIsWeightedSumOfConditionals) {
  std::mt19937_64 g(909);
  oracle::Instance in = oracle::random_instance(g, 4, 2, 2);
  in.names = {"W", "N"};
  oracle::build_library_side(in);
  MixtureWeights w = MixtureWeights::uniform(in.lat.size(), 2, 1.0);
  for (int i = 0; i < in.lat.size(); ++i) {
    w.pi(i, 0) = 0.3;
    w.pi(i, 1) = 0.7;
  }
  ProcessContext ctx{&in.scheme, &in.bag, &in.data.ref_points, &in.data.ref_offset, in.params, 1};
  const Location l1 = in.data.ref_points.at(0), l2 = in.data.ref_points.at(in.data.k() - 1);
  const MarginalCov m = induced_cov_marginal(l1, l2, ctx, mixture_from_weights(w));
  double want = 0.0;
  for (const auto& z : enumerate_bag_dags(2, in.lat.size())) {
    in.z = z;
    want += w.config_probability(z) * oracle::dag_cov(in.pts, in.parents(), in.th)(0, in.data.k() - 1);
  }
  EXPECT_NEAR(m.value, want, 1e-10);
  EXPECT_EQ(m.std_error, 0.0);
}

TEST(Mixture, StationarySurfaceIsBaseCovariance) {
  PointSet grid(2);
  grid.push_back(std::vector<double>{0.3, 0.4}, 0.2);
  grid.push_back(std::vector<double>{0.9, 0.1}, 0.7);
  const CovarianceParams cp{2.0, 1.0, 0.5, 1.5, std::nullopt};
  const Location ref{{0.5, 0.5}, 0.5};
  const Eigen::VectorXd s = stationary_surface(ref, grid, cp);
  const oracle::Theta th{2.0, 1.0, 0.5, 1.5};
  EXPECT_NEAR(s[1], oracle::gneiting({0.5, 0.5, 0.5}, {0.9, 0.1, 0.7}, th), 1e-15);
}
