#include "gbag/simulate.hpp"

#include <cmath>
#include <fstream>

#include "gbag/errors.hpp"
#include "gbag/io.hpp"
#include "gbag/rng.hpp"

namespace gbag {

void SimScenario::validate() const {
  const std::size_t naxes = grid_counts.size();
  if (naxes < 2) throw_config("scenario grid needs spatial axes and time");
  if (lo.size() != naxes || hi.size() != naxes || partition_dims.size() != naxes) {
    throw_config("scenario box and partition dims must match the grid dimension");
  }
  for (int c : grid_counts) {
    if (c < 1) throw_config("scenario grid counts must be >= 1");
  }
  theta.validate();
  if (!(tau2 >= 0.0)) throw_config("scenario tau2 must be non-negative");
  if (bag.spatial_dim() != static_cast<int>(naxes) - 1) throw_config("bag dimension does not match the grid");
  for (int z : true_z) {
    if (z < 0 || z >= bag.size()) throw_config("true direction outside the bag");
  }
}

SimulatedData generate_gbag_data(const SimScenario& sc, int threads) {
  sc.validate();
  SimulatedData out;
  Dataset ds;
  ds.points = regular_grid(sc.grid_counts, sc.lo, sc.hi);
  const Eigen::Index n = static_cast<Eigen::Index>(ds.points.size());
  ds.y = Eigen::VectorXd::Zero(n);
  ds.X = Eigen::MatrixXd::Zero(n, sc.beta.size());
  out.scheme = build_partition(ds.points, sc.partition_dims);
  if (static_cast<int>(sc.true_z.size()) != out.scheme.num_partitions()) {
    throw_config("true direction layout must list one direction per partition");
  }
  const PartitionedData pd = split_reference(ds, out.scheme);
  ConditionalGp gp(out.scheme, sc.bag, pd.ref_points, pd.ref_offset, sc.true_z, sc.theta, threads);
  out.truth = gp.config();

  Rng wr = substream(sc.seed, 0, 0, Stream::kSimulate);
  const Eigen::VectorXd w_ref = gp.sample(wr);
  out.true_w.resize(n);
  for (int r = 0; r < pd.k(); ++r) out.true_w[pd.ref_source[r]] = w_ref[r];

  Rng xr = substream(sc.seed, 0, 0, Stream::kCovariates);
  Rng er = substream(sc.seed, 0, 0, Stream::kNoise);
  const double xsd = std::sqrt(sc.covariate_var);
  const double esd = std::sqrt(sc.tau2);
  for (Eigen::Index i = 0; i < n; ++i) {
    double y = out.true_w[i];
    for (Eigen::Index j = 0; j < sc.beta.size(); ++j) {
      ds.X(i, j) = xsd * xr.normal();
      y += ds.X(i, j) * sc.beta[j];
    }
    ds.y[i] = y + (esd > 0.0 ? esd * er.normal() : 0.0);
  }
  out.data = std::move(ds);
  return out;
}

SimulatedData subsample_lattice(const SimulatedData& full, const std::vector<int>& grid_counts,
                                const std::vector<int>& keep_every) {
  std::vector<int> keep;
  const std::size_t n = full.data.size();
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t rem = r;
    bool ok = true;
    for (std::size_t a = 0; a < grid_counts.size(); ++a) {
      const int idx = static_cast<int>(rem % grid_counts[a]);
      rem /= grid_counts[a];
      if (a < keep_every.size() && idx % keep_every[a] != 0) ok = false;
    }
    if (ok) keep.push_back(static_cast<int>(r));
  }
  SimulatedData out;
  out.scheme = full.scheme;
  out.truth = full.truth;
  out.data.points = full.data.points.subset(keep);
  out.data.y.resize(static_cast<Eigen::Index>(keep.size()));
  out.data.X.resize(static_cast<Eigen::Index>(keep.size()), full.data.X.cols());
  out.true_w.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t q = 0; q < keep.size(); ++q) {
    const Eigen::Index qi = static_cast<Eigen::Index>(q);
    out.data.y[qi] = full.data.y[keep[q]];
    if (full.data.X.cols() > 0) out.data.X.row(qi) = full.data.X.row(keep[q]);
    out.true_w[qi] = full.true_w[keep[q]];
  }
  return out;
}

SimulatedData generate_matern_drift_data(const SimScenario& sc, const std::vector<int>& keep_every, int threads) {
  if (!sc.theta.nu) throw_config("Matern drift generation needs a smoothness parameter nu");
  SimulatedData full = generate_gbag_data(sc, threads);
  bool filter = false;
  for (int k : keep_every) filter = filter || k > 1;
  if (!filter) return full;
  return subsample_lattice(full, sc.grid_counts, keep_every);
}

std::vector<int> read_layout(const std::string& path, const PartitionScheme& scheme, const DirectionBag& bag) {
  const io::CsvTable t = io::read_csv(path);
  const int ct = t.column("t"), cx = t.column("x"), cy = t.column("y"), cd = t.column("direction");
  if (ct < 0 || cx < 0 || cy < 0 || cd < 0) throw_config(path + ": layout header must be t,x,y,direction");
  if (scheme.spatial_dim() != 2) throw_config("layout files describe 2-D spatial lattices");
  std::vector<int> z(scheme.num_partitions(), -1);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int line = t.line_numbers[r];
    const int cell[3] = {static_cast<int>(io::parse_double(t.rows[r][cx], line)),
                         static_cast<int>(io::parse_double(t.rows[r][cy], line)),
                         static_cast<int>(io::parse_double(t.rows[r][ct], line))};
    const int part = scheme.index_of(cell);
    if (part < 0) throw_config(path + ":" + std::to_string(line) + ": cell outside the partition lattice");
    const int h = bag.find(t.rows[r][cd]);
    if (h < 0) throw_config(path + ":" + std::to_string(line) + ": direction not in bag");
    z[part] = h;
  }
  for (int h : z) {
    if (h < 0) throw_config(path + ": layout does not cover every partition");
  }
  return z;
}

void write_layout(const std::string& path, const std::vector<int>& z, const PartitionScheme& scheme,
                  const DirectionBag& bag) {
  std::ofstream out(path);
  if (!out) throw_config("cannot write '" + path + "'");
  out << "t,x,y,direction\n";
  for (int i = 0; i < scheme.num_partitions(); ++i) {
    const auto cell = scheme.cell_of(i);
    out << cell[2] << "," << cell[0] << "," << cell[1] << "," << bag[z[i]].name << "\n";
  }
}

std::string default_data_dir() {
#ifdef GBAG_DATA_DIR
  return GBAG_DATA_DIR;
#else
  return "data";
#endif
}

std::vector<std::string> scenario_presets() {
  return {"sim1-theta1", "sim1-theta2", "sim1-desk",        "sim1-desk-theta2", "sim2-theta3",
          "sim2-theta4", "sim2-theta3-full", "sim2-theta4-full", "fig2a",            "fig2b"};
}

SimScenario scenario_preset(const std::string& name, std::uint64_t seed, const std::string& data_dir) {
  const std::string dir = data_dir.empty() ? default_data_dir() : data_dir;
  SimScenario sc;
  sc.name = name;
  sc.seed = seed;
  sc.bag = DirectionBag::preset_w_nw_n_ne();
  auto sim1 = [&](std::vector<int> grid, std::vector<int> parts, const std::string& layout, CovarianceParams th) {
    sc.grid_counts = std::move(grid);
    sc.partition_dims = std::move(parts);
    sc.theta = th;
    sc.beta = Eigen::VectorXd::Constant(1, 2.0);
    sc.tau2 = 0.01;
    sc.covariate_var = 0.1;
    PointSet pts = regular_grid(sc.grid_counts, sc.lo, sc.hi);
    sc.true_z = read_layout(io::join_path(dir, "layouts/" + layout), build_partition(pts, sc.partition_dims), sc.bag);
  };
  auto sim2 = [&](bool full, double a) {
    sc.grid_counts = full ? std::vector<int>{193, 193, 59} : std::vector<int>{25, 25, 30};
    sc.partition_dims = {1, sc.grid_counts[1], sc.grid_counts[2]};
    sc.theta = CovarianceParams{a, 20.0, 1.0, 150.0, 1.5};
    sc.beta.resize(0);
    sc.tau2 = 0.1;
    sc.true_z.assign(static_cast<std::size_t>(sc.partition_dims[1]) * sc.partition_dims[2], sc.bag.find("N"));
  };
  const CovarianceParams theta1{5.0, 0.5, 0.9, 2.0, std::nullopt};
  const CovarianceParams theta2{10.0, 0.1, 0.2, 2.0, std::nullopt};
  if (name == "sim1-theta1") {
    sim1({40, 40, 8}, {6, 6, 8}, "sim1_6x6x8.csv", theta1);
  } else if (name == "sim1-theta2") {
    sim1({40, 40, 8}, {6, 6, 8}, "sim1_6x6x8.csv", theta2);
  } else if (name == "sim1-desk") {
    sim1({20, 20, 4}, {3, 3, 4}, "desk_3x3x4.csv", theta1);
  } else if (name == "sim1-desk-theta2") {
    sim1({20, 20, 4}, {3, 3, 4}, "desk_3x3x4.csv", theta2);
  } else if (name == "sim2-theta3") {
    sim2(false, 5.0);
  } else if (name == "sim2-theta4") {
    sim2(false, 10.0);
  } else if (name == "sim2-theta3-full") {
    sim2(true, 5.0);
  } else if (name == "sim2-theta4-full") {
    sim2(true, 10.0);
  } else {
    std::string valid;
    for (const auto& p : scenario_presets()) {
      if (p != "fig2a" && p != "fig2b") valid += (valid.empty() ? "" : ", ") + p;
    }
    throw_config("unknown preset '" + name + "'; valid presets: " + valid + ", fig2a, fig2b");
  }
  return sc;
}

std::vector<SurfaceSet> figure2a_surfaces(int threads) {
  const std::vector<int> counts{30, 30, 4};
  const std::vector<double> lo{0, 0, 0}, hi{1, 1, 1};
  const PointSet grid = regular_grid(counts, lo, hi);
  const std::vector<int> parts{3, 3, 4};
  const PartitionScheme scheme = build_partition(grid, parts);
  Dataset ds;
  ds.points = grid;
  ds.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  const PartitionedData pd = split_reference(ds, scheme);
  const DirectionBag bag = DirectionBag::from_names({"W", "NW", "N"});
  const CovarianceParams theta{0.7, 0.8, 0.0, 1.0, std::nullopt};
  // Grid point closest to (0.5, 0.5, 1/3).
  const Location ref{{14.0 / 29.0, 14.0 / 29.0}, 1.0 / 3.0};

  ProcessContext ctx{&scheme, &bag, &pd.ref_points, &pd.ref_offset, theta, threads};
  const int M = scheme.num_partitions();
  std::vector<SurfaceSet> out;
  std::vector<Eigen::VectorXd> single(3);
  for (int h = 0; h < 3; ++h) {
    single[h] = cov_surface(ref, pd.ref_points, ctx, common_direction_mixture(M, {h == 0 ? 1.0 : 0.0, h == 1 ? 1.0 : 0.0, h == 2 ? 1.0 : 0.0}));
  }
  out.push_back({"mixture", pd.ref_points, 0.5 * single[0] + 0.4 * single[1] + 0.1 * single[2]});
  out.push_back({"dag_W", pd.ref_points, single[0]});
  out.push_back({"dag_NW", pd.ref_points, single[1]});
  out.push_back({"dag_N", pd.ref_points, single[2]});
  out.push_back({"stationary", pd.ref_points, stationary_surface(ref, pd.ref_points, theta)});
  return out;
}

DriftCurves figure2b_curves(double a, int ref_index) {
  const std::vector<int> counts{3, 3, 30};
  const std::vector<double> lo{0, 0, 0}, hi{1, 1, 1};
  const PointSet grid = regular_grid(counts, lo, hi);
  const PartitionScheme scheme = build_partition(grid, counts);
  Dataset ds;
  ds.points = grid;
  ds.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  const PartitionedData pd = split_reference(ds, scheme);
  const DirectionBag bag = DirectionBag::from_names({"W"});
  const CovarianceParams theta{a, 0.8, 0.0, 1.0, std::nullopt};
  ConditionalGp gp(scheme, bag, pd.ref_points, pd.ref_offset, std::vector<int>(scheme.num_partitions(), 0), theta);

  DriftCurves dc;
  dc.ref_index = ref_index;
  const int nt = counts[2];
  for (int j = 0; j < nt; ++j) dc.times.push_back(static_cast<double>(j) / (nt - 1));
  const Location ref{{0.5, 0.5}, dc.times[ref_index]};
  PointSet left(2), right(2);
  for (double t : dc.times) {
    left.push_back(Location{{0.0, 0.5}, t});
    right.push_back(Location{{1.0, 0.5}, t});
  }
  dc.left = gp.cov_to_many(ref, left);
  dc.right = gp.cov_to_many(ref, right);
  dc.left_stationary = stationary_surface(ref, left, theta);
  dc.right_stationary = stationary_surface(ref, right, theta);
  return dc;
}

}  // namespace gbag
