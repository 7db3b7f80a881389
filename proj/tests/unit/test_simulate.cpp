#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "gbag/errors.hpp"
#include "gbag/simulate.hpp"

using namespace gbag;

TEST(Presets, KnownNamesAndErrors) {
  const auto names = scenario_presets();
  EXPECT_NE(std::find(names.begin(), names.end(), "sim1-desk"), names.end());
  try {
    scenario_preset("nope", 1);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sim2-theta3"), std::string::npos);
  }
  const SimScenario sc = scenario_preset("sim1-theta1", 1);
  EXPECT_EQ(sc.grid_counts, (std::vector<int>{40, 40, 8}));
  EXPECT_EQ(sc.true_z.size(), 288u);
  EXPECT_DOUBLE_EQ(sc.theta.kappa, 0.9);
  const SimScenario m = scenario_preset("sim2-theta4", 1);
  EXPECT_EQ(m.partition_dims, (std::vector<int>{1, 25, 30}));
  EXPECT_DOUBLE_EQ(*m.theta.nu, 1.5);
}

TEST(Generate, DeterministicInSeedAndShaped) {
  const SimScenario sc = scenario_preset("sim1-desk", 4);
  const SimulatedData a = generate_gbag_data(sc);
  const SimulatedData b = generate_gbag_data(sc);
  const SimulatedData c = generate_gbag_data(scenario_preset("sim1-desk", 5));
  EXPECT_EQ(a.data.size(), 1600u);
  EXPECT_EQ(a.data.y, b.data.y);
  EXPECT_NE(a.data.y, c.data.y);
  EXPECT_EQ(a.truth.z, sc.true_z);
  EXPECT_EQ(a.data.X.cols(), 1);
  // Response is X beta + w + noise with small noise.
  const Eigen::VectorXd resid = a.data.y - 2.0 * a.data.X.col(0) - a.true_w;
  EXPECT_LT(std::sqrt(resid.squaredNorm() / 1600.0), 0.2);
  EXPECT_GT(std::sqrt(resid.squaredNorm() / 1600.0), 0.05);
}

TEST(Generate, SubsampleKeepsEveryKth) {
  SimScenario sc = scenario_preset("sim1-desk", 1);
  const SimulatedData full = generate_gbag_data(sc);
  const SimulatedData sub = subsample_lattice(full, sc.grid_counts, {2, 4, 1});
  EXPECT_EQ(sub.data.size(), 10u * 5u * 4u);
  EXPECT_EQ(sub.data.points.coord(1, 0), full.data.points.coord(2, 0));
  EXPECT_EQ(sub.true_w[1], full.true_w[2]);
}

TEST(Layout, RoundTrip) {
  const SimScenario sc = scenario_preset("sim1-desk", 1);
  const PointSet pts = regular_grid(sc.grid_counts, sc.lo, sc.hi);
  const PartitionScheme s = build_partition(pts, sc.partition_dims);
  const std::string path = (std::filesystem::temp_directory_path() / "gbag_layout_rt.csv").string();
  write_layout(path, sc.true_z, s, sc.bag);
  EXPECT_EQ(read_layout(path, s, sc.bag), sc.true_z);
  std::filesystem::remove(path);
}

TEST(Figures, MixtureSurfaceIsWeightedAverage) {
  const auto surfaces = figure2a_surfaces();
  ASSERT_EQ(surfaces.size(), 5u);
  const Eigen::VectorXd want = 0.5 * surfaces[1].cov + 0.4 * surfaces[2].cov + 0.1 * surfaces[3].cov;
  EXPECT_LT((surfaces[0].cov - want).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(surfaces[0].grid.size(), 3600u);
  // Variance at the reference point equals sigma^2 = 1 on every surface.
  const Location ref{{14.0 / 29.0, 14.0 / 29.0}, 1.0 / 3.0};
  const LocationIndex idx(surfaces[0].grid);
  const int r = idx.find(ref);
  ASSERT_GE(r, 0);
  EXPECT_NEAR(surfaces[4].cov[r], 1.0, 1e-14);
}

TEST(Figures, DriftCurvesShape) {
  const DriftCurves dc = figure2b_curves();
  EXPECT_EQ(dc.times.size(), 30u);
  EXPECT_EQ(dc.ref_index, 14);
  for (int j = 0; j < 30; ++j) EXPECT_NEAR(dc.left_stationary[j], dc.right_stationary[j], 1e-12);
}
