#include "gbag/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gbag/errors.hpp"
#include "gbag/io.hpp"

namespace gbag {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw_config("unknown config key '" + where + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw_config(std::string("config key '") + key + "': " + e.what());
  }
}

void read_bounds(const json& j, const char* key, Bounds& b) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read(j, key, v);
  if (v.size() != 2) throw_config(std::string("config key '") + key + "' must be [lo, hi]");
  b = {v[0], v[1]};
}

void read_pair(const json& j, const char* key, double& a, double& b) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read(j, key, v);
  if (v.size() != 2) throw_config(std::string("config key '") + key + "' must be [shape, scale]");
  a = v[0];
  b = v[1];
}

}  // namespace

Priors PriorSpec::build(int p) const {
  Priors pr;
  pr.mu_beta = Eigen::VectorXd::Constant(p, beta_mean);
  pr.V_beta = beta_var * Eigen::MatrixXd::Identity(p, p);
  pr.a_tau = a_tau;
  pr.b_tau = b_tau;
  pr.a_sigma = a_sigma;
  pr.b_sigma = b_sigma;
  pr.a = a;
  pr.c = c;
  pr.kappa = kappa;
  pr.alpha = alpha;
  pr.validate(p);
  return pr;
}

std::string RunConfig::hash() const { return io::fnv1a_hex(dump_config(*this)); }

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw_config(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw_config("config must be a JSON object");
  reject_unknown(j,
                 {"data", "output_dir", "grid_dims", "bag", "priors", "chain", "seed", "threads", "holdout",
                  "center_response", "sample_unobserved", "export_precision", "out_of_bounds", "nu", "preset",
                  "full_lattice", "predict", "bench"},
                 "");
  RunConfig c;
  read(j, "data", c.data_path);
  read(j, "output_dir", c.output_dir);
  read(j, "grid_dims", c.grid_dims);
  read(j, "bag", c.bag);
  read(j, "holdout", c.holdout);
  read(j, "center_response", c.center_response);
  read(j, "sample_unobserved", c.sample_unobserved);
  read(j, "export_precision", c.export_precision);
  read(j, "preset", c.preset);
  read(j, "full_lattice", c.full_lattice);
  if (j.contains("nu")) {
    double nu = 0.0;
    read(j, "nu", nu);
    c.nu = nu;
  }
  if (j.contains("out_of_bounds")) {
    std::string s;
    read(j, "out_of_bounds", s);
    if (s == "clamp") {
      c.oob = OutOfBounds::kClamp;
    } else if (s == "error") {
      c.oob = OutOfBounds::kError;
    } else {
      throw_config("out_of_bounds must be 'clamp' or 'error'");
    }
  }
  std::uint64_t seed = c.chain.seed;
  read(j, "seed", seed);
  c.chain.seed = seed;
  read(j, "threads", c.chain.threads);

  if (j.contains("priors")) {
    const json& p = j.at("priors");
    reject_unknown(p, {"beta_mean", "beta_var", "tau2", "sigma2", "a", "c", "kappa", "alpha"}, "priors.");
    read(p, "beta_mean", c.priors.beta_mean);
    read(p, "beta_var", c.priors.beta_var);
    read_pair(p, "tau2", c.priors.a_tau, c.priors.b_tau);
    read_pair(p, "sigma2", c.priors.a_sigma, c.priors.b_sigma);
    read_bounds(p, "a", c.priors.a);
    read_bounds(p, "c", c.priors.c);
    read_bounds(p, "kappa", c.priors.kappa);
    read(p, "alpha", c.priors.alpha);
  }
  if (j.contains("chain")) {
    const json& ch = j.at("chain");
    reject_unknown(ch, {"n_iter", "n_burn", "thin", "target_accept", "ram_initial_scale", "ram_decay", "schedule"},
                   "chain.");
    read(ch, "n_iter", c.chain.n_iter);
    read(ch, "n_burn", c.chain.n_burn);
    read(ch, "thin", c.chain.thin);
    read(ch, "target_accept", c.chain.target_accept);
    read(ch, "ram_initial_scale", c.chain.ram_initial_scale);
    read(ch, "ram_decay", c.chain.ram_decay);
    if (ch.contains("schedule")) {
      std::string s;
      read(ch, "schedule", s);
      if (s == "colored") {
        c.chain.schedule = WSchedule::kColored;
      } else if (s == "sequential") {
        c.chain.schedule = WSchedule::kSequential;
      } else {
        throw_config("chain.schedule must be 'colored' or 'sequential'");
      }
    }
  }
  if (j.contains("predict")) {
    const json& p = j.at("predict");
    reject_unknown(p, {"locations", "training"}, "predict.");
    read(p, "locations", c.predict_locations);
    read(p, "training", c.predict_training);
  }
  if (j.contains("bench")) {
    const json& b = j.at("bench");
    reject_unknown(b, {"sizes", "points_per_partition", "time_partitions", "iterations", "warmup", "compare_k"},
                   "bench.");
    read(b, "sizes", c.bench.sizes);
    read(b, "points_per_partition", c.bench.points_per_partition);
    read(b, "time_partitions", c.bench.time_partitions);
    read(b, "iterations", c.bench.iterations);
    read(b, "warmup", c.bench.warmup);
    read(b, "compare_k", c.bench.compare_k);
  }
  if (!(c.holdout >= 0.0 && c.holdout < 1.0)) throw_config("holdout must lie in [0, 1)");
  c.chain.validate();
  c.direction_bag();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["data"] = c.data_path;
  j["output_dir"] = c.output_dir;
  j["grid_dims"] = c.grid_dims;
  j["bag"] = c.bag;
  j["holdout"] = c.holdout;
  j["center_response"] = c.center_response;
  j["sample_unobserved"] = c.sample_unobserved;
  j["export_precision"] = c.export_precision;
  j["out_of_bounds"] = c.oob == OutOfBounds::kClamp ? "clamp" : "error";
  if (c.nu) j["nu"] = *c.nu;
  j["preset"] = c.preset;
  j["full_lattice"] = c.full_lattice;
  j["seed"] = c.chain.seed;
  j["priors"] = {{"beta_mean", c.priors.beta_mean},
                 {"beta_var", c.priors.beta_var},
                 {"tau2", {c.priors.a_tau, c.priors.b_tau}},
                 {"sigma2", {c.priors.a_sigma, c.priors.b_sigma}},
                 {"a", {c.priors.a.lo, c.priors.a.hi}},
                 {"c", {c.priors.c.lo, c.priors.c.hi}},
                 {"kappa", {c.priors.kappa.lo, c.priors.kappa.hi}},
                 {"alpha", c.priors.alpha}};
  j["chain"] = {{"n_iter", c.chain.n_iter},
                {"n_burn", c.chain.n_burn},
                {"thin", c.chain.thin},
                {"target_accept", c.chain.target_accept},
                {"ram_initial_scale", c.chain.ram_initial_scale},
                {"ram_decay", c.chain.ram_decay},
                {"schedule", c.chain.schedule == WSchedule::kColored ? "colored" : "sequential"}};
  j["predict"] = {{"locations", c.predict_locations}, {"training", c.predict_training}};
  j["bench"] = {{"sizes", c.bench.sizes},
                {"points_per_partition", c.bench.points_per_partition},
                {"time_partitions", c.bench.time_partitions},
                {"iterations", c.bench.iterations},
                {"warmup", c.bench.warmup},
                {"compare_k", c.bench.compare_k}};
  return j.dump(2);
}

}  // namespace gbag
