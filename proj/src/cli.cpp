#include "gbag/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>
#include <json.hpp>

#include "gbag/conditional_gp.hpp"
#include "gbag/errors.hpp"
#include "gbag/io.hpp"
#include "gbag/kernels/cov_kernels.hpp"
#include "gbag/predict.hpp"
#include "gbag/rng.hpp"
#include "gbag/simulate.hpp"

#ifndef GBAG_GIT_REVISION
#define GBAG_GIT_REVISION "unknown"
#endif

namespace gbag::cli {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  const std::string path = io::join_path(dir, name);
  std::ofstream out(path);
  if (!out) throw_config("cannot write '" + path + "'");
  return out;
}

void write_json(const std::string& dir, const std::string& name, const json& j) {
  auto out = open_out(dir, name);
  out << j.dump(2) << "\n";
}

void write_manifest(const std::string& dir, const std::string& command, const RunConfig& cfg, double wall,
                    json extra = json::object()) {
  json m = {{"command", command},
            {"config_hash", cfg.hash()},
            {"seed", cfg.chain.seed},
            {"git_revision", GBAG_GIT_REVISION},
            {"threads", cfg.chain.threads},
            {"isa", kernels::isa_name(kernels::active_isa())},
            {"wall_seconds", wall}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_json(dir, "manifest.json", m);
}

void write_point_header(std::ostream& out, int d) {
  for (int a = 0; a < d; ++a) out << "x" << a + 1 << ",";
  out << "time";
}

void write_point(std::ostream& out, const PointSet& pts, std::size_t i) {
  for (int a = 0; a < pts.dim(); ++a) out << io::fmt(pts.coord(i, a)) << ",";
  out << io::fmt(pts.time(i));
}

json interval_summary(const std::vector<double>& v) {
  if (v.empty()) return json::object();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {{"mean", mean}, {"sd", sd}, {"q025", quantile_type7(v, 0.025)}, {"q975", quantile_type7(v, 0.975)}};
}

Dataset subset_rows(const Dataset& d, const std::vector<int>& rows) {
  Dataset out;
  out.points = d.points.subset(rows);
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
  for (std::size_t q = 0; q < rows.size(); ++q) {
    const Eigen::Index qi = static_cast<Eigen::Index>(q);
    out.y[qi] = d.y[rows[q]];
    if (d.X.cols() > 0) out.X.row(qi) = d.X.row(rows[q]);
  }
  return out;
}

std::string location_key(const PartitionedData& data) {
  return io::location_hash(data.ref_points) + io::location_hash(data.nonref_points);
}

// Least-squares fit of log(ms) on log(n).
void loglog_fit(const std::vector<BenchRow>& rows, double& slope, double& r2) {
  const int n = static_cast<int>(rows.size());
  slope = r2 = 0.0;
  if (n < 2) return;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = std::log(static_cast<double>(rows[i].n));
    y[i] = std::log(rows[i].ms_per_iter);
  }
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  const double syy = (y.array() - my).square().sum();
  slope = sxy / sxx;
  r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
}

std::vector<int> near_square(int cells) {
  int b = static_cast<int>(std::sqrt(static_cast<double>(cells)));
  while (b > 1 && cells % b != 0) --b;
  return {cells / b, b};
}

}  // namespace

std::vector<int> choose_holdout(const std::vector<int>& rows, double fraction, std::uint64_t seed) {
  const int n_hold = static_cast<int>(std::lround(fraction * static_cast<double>(rows.size())));
  std::vector<int> perm = rows;
  Rng rng = substream(seed, 0, 0, Stream::kHoldout);
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::size_t j = std::min(i - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(i)));
    std::swap(perm[i - 1], perm[j]);
  }
  perm.resize(static_cast<std::size_t>(n_hold));
  std::sort(perm.begin(), perm.end());
  return perm;
}

PreparedData prepare_data(const RunConfig& cfg, const Dataset& full) {
  PreparedData pd;
  pd.full = full;
  const int d = full.points.dim();
  if (static_cast<int>(cfg.grid_dims.size()) != d + 1) {
    throw_config("grid_dims must list " + std::to_string(d + 1) + " interval counts (spatial axes then time)");
  }
  std::vector<int> observed;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full.observed(i)) {
      observed.push_back(static_cast<int>(i));
    } else {
      pd.predict_rows.push_back(static_cast<int>(i));
    }
  }
  if (observed.empty()) throw_config("dataset has no observed responses");
  pd.holdout_rows = choose_holdout(observed, cfg.holdout, cfg.chain.seed);

  Dataset fit = full;
  for (int r : pd.holdout_rows) fit.y[r] = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> keep;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    if (cfg.sample_unobserved || fit.observed(i)) keep.push_back(static_cast<int>(i));
  }
  Dataset chain_ds = subset_rows(fit, keep);
  if (cfg.center_response) {
    double s = 0.0;
    int n = 0;
    for (Eigen::Index i = 0; i < chain_ds.y.size(); ++i) {
      if (!std::isnan(chain_ds.y[i])) {
        s += chain_ds.y[i];
        ++n;
      }
    }
    pd.response_offset = n > 0 ? s / n : 0.0;
    chain_ds.y.array() -= pd.response_offset;
  }
  const PartitionScheme scheme = build_partition(full.points, cfg.grid_dims);
  if (cfg.oob == OutOfBounds::kError) {
    for (std::size_t i = 0; i < full.size(); ++i) scheme.assign(full.points, i, OutOfBounds::kError);
  }
  pd.data = split_reference(chain_ds, scheme, ReferencePolicy::kObservedAsReference, {}, cfg.oob);
  // Sources refer back to rows of the full dataset.
  for (int& s : pd.data.ref_source) s = keep[s];
  for (int& s : pd.data.nonref_source) s = keep[s];
  return pd;
}

BenchResult run_bench(const BenchSpec& spec, const DirectionBag& bag, std::uint64_t seed, int threads) {
  BenchResult res;
  auto time_one = [&](int n, const DirectionBag& b) {
    const int M = std::max(1, n / spec.points_per_partition);
    const int cells = std::max(1, M / spec.time_partitions);
    std::vector<int> dims = near_square(cells);
    dims.push_back(spec.time_partitions);
    std::vector<std::vector<double>> breaks;
    for (int nd : dims) {
      std::vector<double> e(static_cast<std::size_t>(nd) + 1);
      for (int k = 0; k <= nd; ++k) e[k] = static_cast<double>(k) / nd;
      breaks.push_back(e);
    }
    const PartitionScheme scheme(breaks);
    Rng rng = substream(seed, 0, static_cast<std::uint64_t>(n), Stream::kSimulate);
    Dataset ds;
    ds.points = PointSet(2);
    ds.y.resize(static_cast<Eigen::Index>(scheme.num_partitions()) * spec.points_per_partition);
    ds.X.resize(ds.y.size(), 1);
    Eigen::Index row = 0;
    for (int i = 0; i < scheme.num_partitions(); ++i) {
      const auto [lo, hi] = scheme.box(i);
      for (int q = 0; q < spec.points_per_partition; ++q, ++row) {
        const double x = lo[0] + (hi[0] - lo[0]) * rng.uniform();
        const double y = lo[1] + (hi[1] - lo[1]) * rng.uniform();
        const double t = lo[2] + (hi[2] - lo[2]) * rng.uniform();
        ds.points.push_back(std::vector<double>{x, y}, t);
        ds.X(row, 0) = rng.normal();
        ds.y[row] = std::sin(3.0 * x) * std::cos(2.0 * y) + t + ds.X(row, 0) + 0.1 * rng.normal();
      }
    }
    const PartitionedData data = split_reference(ds, scheme);
    const Priors priors = Priors::defaults(1);
    ChainSettings cs;
    cs.seed = seed;
    cs.threads = threads;
    cs.n_iter = spec.warmup + spec.iterations;
    cs.n_burn = cs.n_iter;
    cs.trace_log_joint = false;
    Sampler sampler(data, b, priors, cs, initial_state(data, b, priors, seed));
    for (int it = 0; it < spec.warmup; ++it) sampler.iterate(it, true);
    const auto t0 = Clock::now();
    for (int it = spec.warmup; it < cs.n_iter; ++it) sampler.iterate(it, true);
    const double ms = 1000.0 * seconds_since(t0) / std::max(1, spec.iterations);
    return BenchRow{static_cast<int>(data.k()), scheme.num_partitions(), b.size(), ms};
  };
  std::vector<BenchRow> main_rows;
  for (int n : spec.sizes) {
    main_rows.push_back(time_one(n, bag));
    res.rows.push_back(main_rows.back());
  }
  loglog_fit(main_rows, res.slope, res.r2);
  if (spec.compare_k && !spec.sizes.empty()) {
    std::vector<std::string> half;
    for (int h = 0; h < std::max(1, bag.size() / 2); ++h) half.push_back(bag[h].name);
    res.rows.push_back(time_one(spec.sizes.back(), DirectionBag::from_names(half)));
  }
  return res;
}

void write_chain(const std::string& dir, const ChainOutput& chain, const PartitionedData& data,
                 const DirectionBag& bag) {
  auto beta = open_out(dir, "beta.csv");
  auto tau2 = open_out(dir, "tau2.csv");
  auto theta = open_out(dir, "theta.csv");
  auto z = open_out(dir, "z.csv");
  auto w = open_out(dir, "w_samples.csv");
  beta << "iteration";
  for (int j = 0; j < data.p; ++j) beta << ",beta_" << j;
  beta << "\n";
  tau2 << "iteration,tau2\n";
  theta << "iteration,a,c,kappa,sigma2\n";
  z << "iteration";
  for (int i = 0; i < data.num_partitions(); ++i) z << ",z_" << i;
  z << "\n";
  w << "iteration";
  for (int r = 0; r < data.k(); ++r) w << ",ref_" << r;
  const bool with_u = !chain.samples.empty() && chain.samples.front().w_U.size() > 0;
  if (with_u) {
    for (int u = 0; u < data.num_nonref(); ++u) w << ",nonref_" << u;
  }
  w << "\n";
  for (const auto& s : chain.samples) {
    beta << s.iteration;
    for (Eigen::Index j = 0; j < s.beta.size(); ++j) beta << "," << io::fmt(s.beta[j]);
    beta << "\n";
    tau2 << s.iteration << "," << io::fmt(s.tau2) << "\n";
    theta << s.iteration << "," << io::fmt(s.theta.a) << "," << io::fmt(s.theta.c) << ","
          << io::fmt(s.theta.kappa) << "," << io::fmt(s.theta.sigma2) << "\n";
    z << s.iteration;
    for (int h : s.z) z << "," << bag[h].name;
    z << "\n";
    w << s.iteration;
    for (Eigen::Index r = 0; r < s.w_S.size(); ++r) w << "," << io::fmt(s.w_S[r]);
    if (with_u) {
      for (Eigen::Index u = 0; u < s.w_U.size(); ++u) w << "," << io::fmt(s.w_U[u]);
    }
    w << "\n";
  }
}

ChainOutput read_chain(const std::string& dir, const PartitionedData& data, const DirectionBag& bag) {
  const io::CsvTable beta = io::read_csv(io::join_path(dir, "beta.csv"));
  const io::CsvTable tau2 = io::read_csv(io::join_path(dir, "tau2.csv"));
  const io::CsvTable theta = io::read_csv(io::join_path(dir, "theta.csv"));
  const io::CsvTable z = io::read_csv(io::join_path(dir, "z.csv"));
  const io::CsvTable w = io::read_csv(io::join_path(dir, "w_samples.csv"));
  const std::size_t S = beta.rows.size();
  if (tau2.rows.size() != S || theta.rows.size() != S || z.rows.size() != S || w.rows.size() != S) {
    throw_config("chain files in '" + dir + "' have different sample counts");
  }
  const int M = data.num_partitions();
  if (static_cast<int>(beta.header.size()) != data.p + 1) throw_config("beta.csv does not match the covariates");
  if (static_cast<int>(z.header.size()) != M + 1) throw_config("z.csv does not match the partition count");
  const int k = data.k(), u = data.num_nonref();
  const int wcols = static_cast<int>(w.header.size()) - 1;
  if (wcols != k && wcols != k + u) throw_config("w_samples.csv does not match the reference set");
  std::optional<double> nu;
  ChainOutput out;
  out.samples.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    PosteriorSample& ps = out.samples[s];
    const int line = beta.line_numbers[s];
    ps.iteration = static_cast<int>(io::parse_double(beta.rows[s][0], line));
    ps.beta.resize(data.p);
    for (int j = 0; j < data.p; ++j) ps.beta[j] = io::parse_double(beta.rows[s][j + 1], line);
    ps.tau2 = io::parse_double(tau2.rows[s][1], tau2.line_numbers[s]);
    const auto& th = theta.rows[s];
    const int tl = theta.line_numbers[s];
    ps.theta = CovarianceParams{io::parse_double(th[1], tl), io::parse_double(th[2], tl), io::parse_double(th[3], tl),
                                io::parse_double(th[4], tl), nu};
    ps.z.resize(M);
    for (int i = 0; i < M; ++i) {
      const int h = bag.find(z.rows[s][i + 1]);
      if (h < 0) throw_config("z.csv line " + std::to_string(z.line_numbers[s]) + ": direction not in the bag");
      ps.z[i] = h;
    }
    ps.w_S.resize(k);
    for (int r = 0; r < k; ++r) ps.w_S[r] = io::parse_double(w.rows[s][r + 1], w.line_numbers[s]);
    if (wcols == k + u) {
      ps.w_U.resize(u);
      for (int q = 0; q < u; ++q) ps.w_U[q] = io::parse_double(w.rows[s][k + q + 1], w.line_numbers[s]);
    }
  }
  return out;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  if (cfg.preset.empty()) throw_config("simulate needs a preset (--preset or \"preset\" in the config)");
  if (cfg.preset == "fig2a" || cfg.preset == "fig2b") return cmd_covsurface(cfg);
  const SimScenario sc = scenario_preset(cfg.preset, cfg.chain.seed);
  SimulatedData sim;
  if (cfg.preset.rfind("sim2", 0) == 0) {
    const bool filter = cfg.preset.size() > 5 && cfg.preset.ends_with("-full") && !cfg.full_lattice;
    sim = generate_matern_drift_data(sc, filter ? std::vector<int>{8, 8, 2} : std::vector<int>{},
                                     cfg.chain.threads);
  } else {
    sim = generate_gbag_data(sc, cfg.chain.threads);
  }
  io::ensure_directory(cfg.output_dir);
  io::write_dataset(io::join_path(cfg.output_dir, "data.csv"), sim.data);
  {
    auto out = open_out(cfg.output_dir, "truth_w.csv");
    out << "row,w\n";
    for (Eigen::Index i = 0; i < sim.true_w.size(); ++i) out << i << "," << io::fmt(sim.true_w[i]) << "\n";
  }
  write_layout(io::join_path(cfg.output_dir, "truth_z.csv"), sim.truth.z, sim.scheme, sc.bag);
  write_manifest(cfg.output_dir, "simulate", cfg, seconds_since(t0),
                 {{"preset", cfg.preset},
                  {"n", sim.data.size()},
                  {"partition_dims", sc.partition_dims},
                  {"location_hash", io::location_hash(sim.data.points)}});
  std::cout << "simulated " << sim.data.size() << " locations (" << cfg.preset << ") into " << cfg.output_dir
            << "\n";
  return 0;
}

int cmd_fit(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  if (cfg.data_path.empty()) throw_config("fit needs a data file (--data or \"data\" in the config)");
  const DirectionBag bag = cfg.direction_bag();
  const PreparedData pd = prepare_data(cfg, io::read_dataset(cfg.data_path));
  const PartitionedData& data = pd.data;
  Priors priors = cfg.priors.build(data.p);
  ChainSettings cs = cfg.chain;
  ModelState init = initial_state(data, bag, priors, cs.seed);
  init.theta.nu = cfg.nu;
  io::ensure_directory(cfg.output_dir);
  const ChainOutput chain = run_chain(data, bag, priors, cs, &init);
  const double wall = seconds_since(t0);

  write_chain(cfg.output_dir, chain, data, bag);
  const int S = static_cast<int>(chain.samples.size());
  {
    auto out = open_out(cfg.output_dir, "w_summary.csv");
    out << "group,index,source_row,";
    write_point_header(out, data.ref_points.dim());
    out << ",mean,sd,lo95,hi95\n";
    auto emit = [&](const char* group, const PointSet& pts, const std::vector<int>& src, bool ref) {
      for (std::size_t r = 0; r < pts.size(); ++r) {
        std::vector<double> v;
        for (const auto& s : chain.samples) {
          const Eigen::VectorXd& w = ref ? s.w_S : s.w_U;
          if (w.size() > 0) v.push_back(w[static_cast<Eigen::Index>(r)]);
        }
        if (v.empty()) continue;
        const json js = interval_summary(v);
        out << group << "," << r << "," << src[r] << ",";
        write_point(out, pts, r);
        out << "," << io::fmt(js["mean"]) << "," << io::fmt(js["sd"]) << "," << io::fmt(js["q025"]) << ","
            << io::fmt(js["q975"]) << "\n";
      }
    };
    emit("reference", data.ref_points, data.ref_source, true);
    emit("nonreference", data.nonref_points, data.nonref_source, false);
  }
  {
    auto out = open_out(cfg.output_dir, "diagnostics.csv");
    out << "iteration,log_joint,theta_accept_rate,tau2,sigma2\n";
    for (const auto& d : chain.summary.trace) {
      out << d.iteration << "," << io::fmt(d.log_joint) << "," << io::fmt(d.theta_accept_rate) << ","
          << io::fmt(d.tau2) << "," << io::fmt(d.sigma2) << "\n";
    }
  }
  {
    auto out = open_out(cfg.output_dir, "timings.csv");
    out << "step,total_ms,ms_per_iteration\n";
    for (int s = 0; s < static_cast<int>(Step::kCount); ++s) {
      out << step_name(static_cast<Step>(s)) << "," << io::fmt(chain.summary.step_ms[s]) << ","
          << io::fmt(chain.summary.step_ms[s] / cs.n_iter) << "\n";
    }
  }
  {
    auto out = open_out(cfg.output_dir, "holdout.csv");
    out << "row,";
    write_point_header(out, pd.full.points.dim());
    out << ",y\n";
    for (int r : pd.holdout_rows) {
      out << r << ",";
      write_point(out, pd.full.points, static_cast<std::size_t>(r));
      out << "," << io::fmt(pd.full.y[r]) << "\n";
    }
  }

  json summary;
  summary["samples"] = S;
  summary["theta_accept_rate"] = chain.summary.theta_accept_rate();
  summary["response_offset"] = pd.response_offset;
  summary["n_reference"] = data.k();
  summary["n_nonreference"] = data.num_nonref();
  summary["n_holdout"] = pd.holdout_rows.size();
  summary["partitions"] = data.num_partitions();
  summary["bag"] = cfg.bag;
  if (S > 0) {
    for (int j = 0; j < data.p; ++j) {
      std::vector<double> v;
      for (const auto& s : chain.samples) v.push_back(s.beta[j]);
      summary["beta"].push_back(interval_summary(v));
    }
    std::vector<double> tau2, a, c, kappa, sigma2;
    for (const auto& s : chain.samples) {
      tau2.push_back(s.tau2);
      a.push_back(s.theta.a);
      c.push_back(s.theta.c);
      kappa.push_back(s.theta.kappa);
      sigma2.push_back(s.theta.sigma2);
    }
    summary["tau2"] = interval_summary(tau2);
    summary["a"] = interval_summary(a);
    summary["c"] = interval_summary(c);
    summary["kappa"] = interval_summary(kappa);
    summary["sigma2"] = interval_summary(sigma2);
    const DirectionPosterior dp = direction_posterior(chain, bag.size());
    for (int i = 0; i < data.num_partitions(); ++i) summary["z_mode"].push_back(bag[dp.mode[i]].name);

    if (cfg.export_precision) {
      CovarianceParams th{summary["a"]["mean"], summary["c"]["mean"], summary["kappa"]["mean"],
                          summary["sigma2"]["mean"], cfg.nu};
      ConditionalGp gp(data.scheme, bag, data.ref_points, data.ref_offset, dp.mode, th, cs.threads);
      const Eigen::SparseMatrix<double> Q = gp.precision();
      auto out = open_out(cfg.output_dir, "precision_coo.csv");
      out << "row,col,value\n";
      for (int col = 0; col < Q.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(Q, col); it; ++it) {
          out << it.row() << "," << it.col() << "," << io::fmt(it.value()) << "\n";
        }
      }
    }
  }
  write_json(cfg.output_dir, "summary.json", summary);
  write_manifest(cfg.output_dir, "fit", cfg, wall,
                 {{"location_hash", location_key(data)}, {"data", cfg.data_path}, {"samples", S}});
  std::cout << "fit: " << S << " samples, theta acceptance " << chain.summary.theta_accept_rate() << ", "
            << wall << " s\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  if (cfg.data_path.empty()) throw_config("predict needs the data file used for fitting");
  const DirectionBag bag = cfg.direction_bag();
  const PreparedData pd = prepare_data(cfg, io::read_dataset(cfg.data_path));
  const PartitionedData& data = pd.data;
  {
    std::ifstream in(io::join_path(cfg.output_dir, "manifest.json"));
    if (!in) throw_config("no fitted chain in '" + cfg.output_dir + "' (run fit first)");
    json m;
    try {
      m = json::parse(in);
    } catch (const json::exception&) {
      throw_config("fit manifest in '" + cfg.output_dir + "' is unreadable");
    }
    if (m.value("location_hash", std::string()) != location_key(data)) {
      throw_config("reference locations differ from the fitted chain (location hash mismatch)");
    }
  }
  ChainOutput chain = read_chain(cfg.output_dir, data, bag);
  for (auto& s : chain.samples) s.theta.nu = cfg.nu;

  struct Target {
    const char* kind;
    int row;
  };
  std::vector<Target> targets;
  for (int r : pd.holdout_rows) targets.push_back({"holdout", r});
  for (int r : pd.predict_rows) targets.push_back({"predict", r});
  if (cfg.predict_training) {
    for (int r : data.ref_source) targets.push_back({"training", r});
  }
  PointSet locs(pd.full.points.dim());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(targets.size()), data.p);
  Eigen::VectorXd truth(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t q = 0; q < targets.size(); ++q) {
    locs.append_from(pd.full.points, static_cast<std::size_t>(targets[q].row));
    if (data.p > 0) X.row(static_cast<Eigen::Index>(q)) = pd.full.X.row(targets[q].row);
    truth[static_cast<Eigen::Index>(q)] = pd.full.y[targets[q].row];
  }
  Dataset extra;
  if (!cfg.predict_locations.empty()) {
    extra = io::read_dataset(cfg.predict_locations);
    if (extra.points.dim() != locs.dim() || extra.num_covariates() != data.p) {
      throw_config("prediction locations do not match the data layout");
    }
    const Eigen::Index base = X.rows();
    X.conservativeResize(base + static_cast<Eigen::Index>(extra.size()), data.p);
    truth.conservativeResize(X.rows());
    for (std::size_t q = 0; q < extra.size(); ++q) {
      locs.append_from(extra.points, q);
      const Eigen::Index qi = base + static_cast<Eigen::Index>(q);
      if (data.p > 0) X.row(qi) = extra.X.row(static_cast<Eigen::Index>(q));
      truth[qi] = extra.y[static_cast<Eigen::Index>(q)];
      targets.push_back({"extra", static_cast<int>(q)});
    }
  }
  PredictOptions po;
  po.seed = cfg.chain.seed;
  po.threads = cfg.chain.threads;
  po.response_offset = pd.response_offset;
  const PredictionResult res = predict_at(locs, X, chain, data, bag, po);

  {
    auto out = open_out(cfg.output_dir, "predictions.csv");
    out << "kind,row,";
    write_point_header(out, locs.dim());
    out << ",mean,sd,lo95,hi95,w_mean,y\n";
    for (std::size_t q = 0; q < targets.size(); ++q) {
      const Eigen::Index qi = static_cast<Eigen::Index>(q);
      out << targets[q].kind << "," << targets[q].row << ",";
      write_point(out, locs, q);
      out << "," << io::fmt(res.mean[qi]) << "," << io::fmt(res.sd[qi]) << "," << io::fmt(res.lo95[qi]) << ","
          << io::fmt(res.hi95[qi]) << "," << io::fmt(res.w_mean[qi]) << "," << io::fmt(truth[qi]) << "\n";
    }
  }
  {
    const DirectionPosterior dp = direction_posterior(chain, bag.size());
    auto out = open_out(cfg.output_dir, "directions.csv");
    out << "partition";
    const int d = data.scheme.spatial_dim();
    for (int a = 0; a < d; ++a) out << ",cell_x" << a + 1;
    out << ",cell_t";
    for (int h = 0; h < bag.size(); ++h) out << ",prob_" << bag[h].name;
    out << ",mode\n";
    for (int i = 0; i < data.num_partitions(); ++i) {
      out << i;
      for (int c : data.scheme.cell_of(i)) out << "," << c;
      for (int h = 0; h < bag.size(); ++h) out << "," << io::fmt(dp.prob(i, h));
      out << "," << bag[dp.mode[i]].name << "\n";
    }
  }
  json metrics;
  metrics["samples"] = chain.samples.size();
  auto metric_block = [&](const char* kind) {
    std::vector<int> idx;
    for (std::size_t q = 0; q < targets.size(); ++q) {
      if (std::string(targets[q].kind) == kind && !std::isnan(truth[static_cast<Eigen::Index>(q)])) {
        idx.push_back(static_cast<int>(q));
      }
    }
    if (idx.empty()) return;
    PredictionResult sub;
    Eigen::VectorXd t(static_cast<Eigen::Index>(idx.size()));
    sub.mean.resize(t.size());
    sub.lo95.resize(t.size());
    sub.hi95.resize(t.size());
    for (std::size_t q = 0; q < idx.size(); ++q) {
      const Eigen::Index qi = static_cast<Eigen::Index>(q);
      t[qi] = truth[idx[q]];
      sub.mean[qi] = res.mean[idx[q]];
      sub.lo95[qi] = res.lo95[idx[q]];
      sub.hi95[qi] = res.hi95[idx[q]];
    }
    const MetricReport m = compute_metrics(t, sub);
    metrics[kind] = {{"n", idx.size()},
                     {"rmspe", m.rmspe},
                     {"mape", m.mape},
                     {"ci_coverage_95", m.ci_coverage_95},
                     {"ci_width_95", m.ci_width_95}};
  };
  metric_block("holdout");
  metric_block("training");
  metric_block("extra");
  write_json(cfg.output_dir, "metrics.json", metrics);
  std::cout << "predicted " << targets.size() << " locations in " << seconds_since(t0) << " s\n";
  if (metrics.contains("holdout")) std::cout << "holdout RMSPE " << metrics["holdout"]["rmspe"] << "\n";
  return 0;
}

int cmd_covsurface(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  const std::string preset = cfg.preset.empty() ? "fig2a" : cfg.preset;
  io::ensure_directory(cfg.output_dir);
  if (preset == "fig2a") {
    for (const SurfaceSet& s : figure2a_surfaces(cfg.chain.threads)) {
      auto out = open_out(cfg.output_dir, "covsurface_" + s.name + ".csv");
      out << "x,y,t,cov\n";
      for (std::size_t i = 0; i < s.grid.size(); ++i) {
        write_point(out, s.grid, i);
        out << "," << io::fmt(s.cov[static_cast<Eigen::Index>(i)]) << "\n";
      }
    }
  } else if (preset == "fig2b") {
    const DriftCurves dc = figure2b_curves();
    auto out = open_out(cfg.output_dir, "drift_curves.csv");
    out << "t,left,right,left_stationary,right_stationary\n";
    for (std::size_t j = 0; j < dc.times.size(); ++j) {
      const Eigen::Index ji = static_cast<Eigen::Index>(j);
      out << io::fmt(dc.times[j]) << "," << io::fmt(dc.left[ji]) << "," << io::fmt(dc.right[ji]) << ","
          << io::fmt(dc.left_stationary[ji]) << "," << io::fmt(dc.right_stationary[ji]) << "\n";
    }
  } else {
    throw_config("covsurface preset must be 'fig2a' or 'fig2b'");
  }
  write_manifest(cfg.output_dir, "covsurface", cfg, seconds_since(t0), {{"preset", preset}});
  std::cout << "wrote " << preset << " covariance output to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  const BenchResult res = run_bench(cfg.bench, cfg.direction_bag(), cfg.chain.seed, cfg.chain.threads);
  io::ensure_directory(cfg.output_dir);
  auto out = open_out(cfg.output_dir, "bench.csv");
  out << "n,partitions,K,ms_per_iteration\n";
  std::printf("%10s %11s %3s %18s\n", "n", "partitions", "K", "ms/iteration");
  for (const BenchRow& r : res.rows) {
    out << r.n << "," << r.partitions << "," << r.K << "," << io::fmt(r.ms_per_iter) << "\n";
    std::printf("%10d %11d %3d %18.3f\n", r.n, r.partitions, r.K, r.ms_per_iter);
  }
  std::printf("log-log slope %.3f, R^2 %.4f\n", res.slope, res.r2);
  write_manifest(cfg.output_dir, "bench", cfg, seconds_since(t0), {{"slope", res.slope}, {"r2", res.r2}});
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Bag-of-DAGs spatiotemporal Gaussian process"};
  app.require_subcommand(1);
  std::string config_path, data_path, output_dir, preset;
  std::uint64_t seed = 0;
  int threads = 0;
  double holdout = -1.0;
  bool full_lattice = false;

  std::vector<CLI::Option*> seed_opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    seed_opts.push_back(sub->add_option("--seed", seed, "Master seed"));
    sub->add_option("--threads", threads, "Worker threads");
    sub->add_option("--output", output_dir, "Output directory");
  };
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  add_common(sim);
  sim->add_option("--preset", preset, "Scenario name");
  sim->add_flag("--full-lattice", full_lattice, "Keep the unfiltered lattice for -full presets");
  CLI::App* fit = app.add_subcommand("fit", "Run the MCMC sampler");
  add_common(fit);
  fit->add_option("--data", data_path, "Input CSV");
  fit->add_option("--holdout", holdout, "Held-out fraction of observed rows");
  CLI::App* pred = app.add_subcommand("predict", "Posterior prediction from a fitted chain");
  add_common(pred);
  pred->add_option("--data", data_path, "Input CSV used for fitting");
  pred->add_option("--holdout", holdout, "Held-out fraction used for fitting");
  CLI::App* cov = app.add_subcommand("covsurface", "Induced covariance surfaces");
  add_common(cov);
  cov->add_option("--preset", preset, "fig2a or fig2b");
  CLI::App* bench = app.add_subcommand("bench", "Per-iteration timing across data sizes");
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? parse_config_text("{}") : load_config(config_path);
    for (const CLI::Option* o : seed_opts) {
      if (o->count() > 0) cfg.chain.seed = seed;
    }
    if (threads > 0) cfg.chain.threads = threads;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (!data_path.empty()) cfg.data_path = data_path;
    if (!preset.empty()) cfg.preset = preset;
    if (full_lattice) cfg.full_lattice = true;
    if (holdout >= 0.0) {
      if (holdout >= 1.0) throw_config("--holdout must lie in [0, 1)");
      cfg.holdout = holdout;
    }
    if (sim->parsed()) return cmd_simulate(cfg);
    if (fit->parsed()) return cmd_fit(cfg);
    if (pred->parsed()) return cmd_predict(cfg);
    if (cov->parsed()) return cmd_covsurface(cfg);
    return cmd_bench(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gbag::cli
