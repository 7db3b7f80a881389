#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gbag/errors.hpp"
#include "gbag/mcmc.hpp"
#include "tiny_model.hpp"

using namespace gbag;
using oracle::make_tiny;
using oracle::Tiny;

namespace {

FactorCache full_cache(const Tiny& t) {
  FactorCache c(t.data.scheme, t.in.bag, RefLayout{&t.data.ref_points, &t.data.ref_offset}, &t.data.nonref_points,
                &t.data.nonref_offset);
  c.compute(t.state.theta.corr(), nullptr, 1);
  return c;
}

// Dense joint precision of (w_S, w_U) and the observation mask on w_S.
Eigen::MatrixXd dense_precision(const Tiny& t) {
  return oracle::joint_cov_with_u(t.in.pts, t.in.parents(), t.upts, t.upart, t.in.th).inverse();
}

PartitionedData small_dataset(std::uint64_t seed, int n_side, std::vector<int> dims) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n01;
  Dataset ds;
  ds.points = PointSet(2);
  const int n = n_side * n_side * dims[2];
  ds.y.resize(n);
  ds.X.resize(n, 1);
  for (int q = 0; q < n; ++q) {
    const double x = u(g), y = u(g), t = u(g);
    ds.points.push_back(std::vector<double>{x, y}, t);
    ds.X(q, 0) = 1.0;
    ds.y[q] = std::sin(4 * x) + y * t + 0.1 * n01(g);
  }
  return split_reference(ds, build_partition(ds.points, dims));
}

}  // namespace

TEST(Ram, FlatTargetAcceptanceConvergesToTarget) {
  RamAdapter ram(2, 0.1, 0.234, 0.6);
  Rng rng(5);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  auto lt = [](const Eigen::VectorXd& v) {
    return (v.cwiseAbs().maxCoeff() < 1.0) ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  double lx = lt(x);
  int acc = 0;
  const int n = 20000;
  for (int it = 0; it < n; ++it) acc += ram_step(x, lx, lt, ram, rng, true).accepted;
  EXPECT_NEAR(static_cast<double>(acc) / n, 0.234, 0.03);
  EXPECT_EQ(ram.adaptations(), n);
}

TEST(Ram, NoAdaptationKeepsFactor) {
  RamAdapter ram(3, 0.5);
  Rng rng(6);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  auto lt = [](const Eigen::VectorXd& v) { return -0.5 * v.squaredNorm(); };
  double lx = lt(x);
  for (int it = 0; it < 100; ++it) ram_step(x, lx, lt, ram, rng, false);
  EXPECT_EQ(ram.S(), 0.5 * Eigen::MatrixXd::Identity(3, 3));
}

TEST(ThetaLink, RoundTripAndJacobian) {
  Priors p = Priors::defaults(0);
  p.kappa = {0.3, 0.3};
  const ThetaLink link(p);
  EXPECT_EQ(link.free, (std::vector<int>{0, 1}));
  CovarianceParams th{5.5, 0.4, 0.3, 1.0, std::nullopt};
  const Eigen::VectorXd eta = link.to_eta(th);
  const CovarianceParams back = link.from_eta(eta, th);
  EXPECT_NEAR(back.a, 5.5, 1e-12);
  EXPECT_NEAR(back.c, 0.4, 1e-12);
  EXPECT_EQ(back.kappa, 0.3);
  // Jacobian against central differences of the map.
  const double h = 1e-6;
  double want = 0.0;
  for (int q = 0; q < 2; ++q) {
    Eigen::VectorXd ep = eta, em = eta;
    ep[q] += h;
    em[q] -= h;
    const CovarianceParams tp = link.from_eta(ep, th), tm = link.from_eta(em, th);
    const double dp = q == 0 ? tp.a - tm.a : tp.c - tm.c;
    want += std::log(dp / (2 * h));
  }
  EXPECT_NEAR(link.log_jacobian(eta), want, 1e-6);
  Eigen::VectorXd far(2);
  far << 800.0, -800.0;
  EXPECT_TRUE(std::isfinite(link.log_jacobian(far)));
}

TEST(Coloring, NoConflictsWithinAColor) {
  const PartitionScheme s = oracle::unit_scheme(oracle::Lattice{4, 4, 3});
  const DirectionBag bag = DirectionBag::preset_w_nw_n_ne();
  const auto colors = color_partitions(s, bag);
  const int M = s.num_partitions();
  // Possible parents under any membership.
  std::vector<std::set<int>> pa(M);
  for (int i = 0; i < M; ++i) {
    for (int h = 0; h < bag.size(); ++h) {
      const int sp = spatial_neighbor(s, bag[h], i);
      if (sp >= 0) pa[i].insert(sp);
    }
    if (temporal_neighbor(s, i) >= 0) pa[i].insert(temporal_neighbor(s, i));
  }
  auto conflict = [&](int i, int j) {
    if (pa[i].count(j) || pa[j].count(i)) return true;
    for (int c = 0; c < M; ++c)
      if (pa[c].count(i) && pa[c].count(j)) return true;
    return false;
  };
  std::vector<int> seen(M, 0);
  for (const auto& col : colors) {
    for (std::size_t a = 0; a < col.size(); ++a) {
      ++seen[col[a]];
      for (std::size_t b = a + 1; b < col.size(); ++b) EXPECT_FALSE(conflict(col[a], col[b]));
    }
  }
  for (int i = 0; i < M; ++i) EXPECT_EQ(seen[i], 1);
}

TEST(Updates, WConditionalMatchesDenseGaussian) {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const Tiny t = make_tiny(seed, 3);
    const FactorCache cache = full_cache(t);
    const auto children = children_of(resolve_parents(t.data.scheme, t.in.bag, t.state.z));
    const Eigen::MatrixXd Q = dense_precision(t);
    Eigen::VectorXd w(Q.rows());
    w << t.state.w_S, t.state.w_U;
    for (int i = 0; i < t.in.lat.size(); ++i) {
      const int off = t.data.ref_offset[i], ki = t.data.k_i(i);
      if (ki == 0) continue;
      Rng rng(1);
      Eigen::MatrixXd P;
      Eigen::VectorXd mean;
      update_w_partition(t.state, t.data, cache, children, i, rng, &P, &mean);
      Eigen::MatrixXd Pd = Q.block(off, off, ki, ki);
      Eigen::VectorXd eta = Eigen::VectorXd::Zero(ki);
      for (int r = 0; r < ki; ++r) {
        Pd(r, r) += 1.0 / t.state.tau2;
        eta[r] += (t.data.ref_y[off + r] - t.data.ref_X(off + r, 0) * t.state.beta[0]) / t.state.tau2;
      }
      Eigen::VectorXd rest = w;
      rest.segment(off, ki).setZero();
      eta -= Q.middleRows(off, ki) * rest;
      const Eigen::VectorXd md = Pd.ldlt().solve(eta);
      EXPECT_LT((P - Pd).cwiseAbs().maxCoeff(), 1e-8 * Pd.cwiseAbs().maxCoeff()) << "partition " << i;
      EXPECT_LT((mean - md).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + md.cwiseAbs().maxCoeff())) << "partition " << i;
    }
  }
}

TEST(Updates, MembershipWeightsMatchDenseLogJointDifferences) {
  for (std::uint64_t seed : {31u, 32u, 33u, 34u}) {
    Tiny t = make_tiny(seed, 2);
    if (t.in.bag.size() < 2) continue;
    const FactorCache cache = full_cache(t);
    for (int i = 0; i < t.in.lat.size(); ++i) {
      const std::vector<double> lw = z_log_weights(t.state, t.data, cache, i);
      std::vector<double> dense;
      for (int h = 0; h < t.in.bag.size(); ++h) {
        Tiny v = t;
        v.state.z[i] = h;
        v.in.z[i] = h;
        dense.push_back(log_joint(v.state, v.data, v.in.bag, v.priors));
      }
      for (int h = 1; h < t.in.bag.size(); ++h) EXPECT_NEAR(lw[h] - lw[0], dense[h] - dense[0], 1e-8);
    }
  }
}

TEST(Updates, ConjugateDrawsHaveClosedFormMeans) {
  Tiny t = make_tiny(41, 2);
  const FactorCache cache = full_cache(t);
  const ObservedView obs = observed_view(t.data);
  const int n = 20000;
  double sb = 0, sb2 = 0, st = 0, st2 = 0, ss = 0, ss2 = 0;
  Rng rng(3);
  for (int d = 0; d < n; ++d) {
    const double b = update_beta(t.state, obs, t.priors, rng)[0];
    const double tau2 = update_tau2(t.state, obs, t.priors, rng);
    const double s2 = update_sigma2(t.state, t.data, cache, t.priors, rng);
    sb += b, sb2 += b * b, st += tau2, st2 += tau2 * tau2, ss += s2, ss2 += s2 * s2;
  }
  auto check = [&](double s, double s2sum, double want, const char* what) {
    const double m = s / n, se = std::sqrt((s2sum / n - m * m) / n);
    EXPECT_NEAR(m, want, 4 * se) << what;
  };
  // beta | rest: precision 1/100 + x'x/tau2.
  const int k = t.data.k();
  double xx = 0, xr = 0, rss = 0;
  for (int r = 0; r < k; ++r) {
    const double x = t.data.ref_X(r, 0);
    xx += x * x;
    xr += x * (t.data.ref_y[r] - t.state.w_S[r]);
    const double e = t.data.ref_y[r] - x * t.state.beta[0] - t.state.w_S[r];
    rss += e * e;
  }
  check(sb, sb2, (xr / t.state.tau2) / (0.01 + xx / t.state.tau2), "beta");
  check(st, st2, (0.1 + rss / 2) / (2.0 + k / 2.0 - 1.0), "tau2");
  // sigma2 | rest uses the unit-scale quadratic form of (w_S, w_U).
  Eigen::VectorXd w(k + t.state.w_U.size());
  w << t.state.w_S, t.state.w_U;
  const double quad = t.state.theta.sigma2 * w.dot(dense_precision(t) * w);
  check(ss, ss2, (1.0 + quad / 2) / (2.0 + w.size() / 2.0 - 1.0), "sigma2");
}

TEST(Updates, MixtureWeightsStayOnSimplex) {
  Tiny t = make_tiny(51, 0);
  const MixtureWeights pi = update_pi(t.state, 9, 3);
  EXPECT_TRUE(pi.on_simplex(1e-12));
  EXPECT_EQ(pi.pi.rows(), t.in.lat.size());
}

TEST(Chain, RetentionRule) {
  const PartitionedData data = small_dataset(1, 4, {2, 2, 2});
  ChainSettings cs;
  cs.n_iter = 10;
  cs.n_burn = 4;
  cs.thin = 2;
  const ChainOutput out = run_chain(data, DirectionBag::from_names({"W", "N"}), Priors::defaults(1), cs);
  ASSERT_EQ(out.samples.size(), 3u);
  EXPECT_EQ(out.samples[0].iteration, 5);
  EXPECT_EQ(out.samples[2].iteration, 9);
  EXPECT_EQ(out.summary.trace.size(), 10u);
}

TEST(Chain, DeterministicAcrossRunsAndThreads) {
  const PartitionedData data = small_dataset(2, 5, {3, 3, 2});
  const DirectionBag bag = DirectionBag::preset_w_nw_n_ne();
  for (WSchedule sched : {WSchedule::kColored, WSchedule::kSequential}) {
    ChainSettings cs;
    cs.n_iter = 30;
    cs.n_burn = 10;
    cs.seed = 77;
    cs.schedule = sched;
    const ChainOutput a = run_chain(data, bag, Priors::defaults(1), cs);
    cs.threads = 4;
    const ChainOutput b = run_chain(data, bag, Priors::defaults(1), cs);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t s = 0; s < a.samples.size(); ++s) {
      EXPECT_EQ(a.samples[s].w_S, b.samples[s].w_S);
      EXPECT_EQ(a.samples[s].z, b.samples[s].z);
      EXPECT_EQ(a.samples[s].theta.a, b.samples[s].theta.a);
      EXPECT_EQ(a.samples[s].tau2, b.samples[s].tau2);
    }
  }
}

TEST(Chain, SettingsValidation) {
  ChainSettings cs;
  cs.n_burn = cs.n_iter + 1;
  EXPECT_THROW(cs.validate(), ConfigError);
  cs = ChainSettings{};
  cs.thin = 0;
  EXPECT_THROW(cs.validate(), ConfigError);
  cs = ChainSettings{};
  cs.threads = 0;
  EXPECT_THROW(cs.validate(), ConfigError);
}

TEST(Chain, InitialStateHasConsistentShapes) {
  const PartitionedData data = small_dataset(3, 4, {2, 2, 2});
  const DirectionBag bag = DirectionBag::from_names({"W", "NW"});
  const Priors p = Priors::defaults(1);
  const ModelState s = initial_state(data, bag, p, 5);
  EXPECT_EQ(s.w_S.size(), data.k());
  EXPECT_EQ(static_cast<int>(s.z.size()), data.num_partitions());
  EXPECT_TRUE(p.in_box(s.theta));
  EXPECT_GT(s.tau2, 0.0);
  EXPECT_TRUE(s.pi.on_simplex());
}
