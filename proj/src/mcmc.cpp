#include "gbag/mcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "gbag/errors.hpp"

namespace gbag {

void ChainSettings::validate() const {
  if (n_iter < 0 || n_burn < 0) throw_config("iteration counts must be non-negative");
  if (n_burn > n_iter) throw_config("n_burn must not exceed n_iter");
  if (thin < 1) throw_config("thin must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw_config("target_accept must lie in (0, 1)");
  if (!(ram_initial_scale > 0.0)) throw_config("ram_initial_scale must be positive");
  if (!(ram_decay > 0.5 && ram_decay <= 1.0)) throw_config("ram_decay must lie in (0.5, 1]");
  if (threads < 1) throw_config("threads must be >= 1");
}

const char* step_name(Step s) {
  switch (s) {
    case Step::kBeta: return "beta";
    case Step::kTau2: return "tau2";
    case Step::kZ: return "z";
    case Step::kPi: return "pi";
    case Step::kWRef: return "w_reference";
    case Step::kWNonref: return "w_nonreference";
    case Step::kTheta: return "theta";
    case Step::kSigma2: return "sigma2";
    default: return "unknown";
  }
}

RamAdapter::RamAdapter(int dim, double initial_scale, double target, double decay)
    : S_(initial_scale * Eigen::MatrixXd::Identity(dim, dim)), target_(target), decay_(decay) {}

Eigen::VectorXd RamAdapter::draw_u(Rng& rng) const {
  Eigen::VectorXd u(dim());
  for (int j = 0; j < dim(); ++j) u[j] = rng.normal();
  return u;
}

void RamAdapter::adapt(const Eigen::VectorXd& u, double accept_prob) {
  ++n_;
  const double nrm2 = u.squaredNorm();
  if (!(nrm2 > 0.0)) return;
  const double eta = std::min(1.0, std::pow(static_cast<double>(n_), -decay_));
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim(), dim());
  const Eigen::MatrixXd A = S_ * (I + eta * (accept_prob - target_) * u * u.transpose() / nrm2) * S_.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (A + A.transpose()));
  if (llt.info() == Eigen::Success) S_ = llt.matrixL();
}

RamStepResult ram_step(Eigen::VectorXd& x, double& log_target_x,
                       const std::function<double(const Eigen::VectorXd&)>& log_target, RamAdapter& ram, Rng& rng,
                       bool adapt) {
  const Eigen::VectorXd u = ram.draw_u(rng);
  const Eigen::VectorXd xp = x + ram.S() * u;
  const double lp = log_target(xp);
  RamStepResult r;
  if (std::isfinite(lp)) {
    const double diff = lp - log_target_x;
    r.accept_prob = diff >= 0.0 ? 1.0 : std::exp(diff);
  }
  const double v = rng.uniform();
  if (v < r.accept_prob) {
    r.accepted = true;
    x = xp;
    log_target_x = lp;
  }
  if (adapt) ram.adapt(u, r.accept_prob);
  return r;
}

ThetaLink::ThetaLink(const Priors& priors) : bounds{priors.a, priors.c, priors.kappa} {
  for (int j = 0; j < 3; ++j) {
    if (!bounds[j].fixed()) free.push_back(j);
  }
}

namespace {

double& theta_coord(CovarianceParams& t, int j) { return j == 0 ? t.a : (j == 1 ? t.c : t.kappa); }
double theta_coord(const CovarianceParams& t, int j) { return j == 0 ? t.a : (j == 1 ? t.c : t.kappa); }

}  // namespace

Eigen::VectorXd ThetaLink::to_eta(const CovarianceParams& theta) const {
  Eigen::VectorXd eta(static_cast<Eigen::Index>(free.size()));
  for (std::size_t q = 0; q < free.size(); ++q) {
    const Bounds& b = bounds[free[q]];
    const double s = std::clamp((theta_coord(theta, free[q]) - b.lo) / (b.hi - b.lo), 1e-12, 1.0 - 1e-12);
    eta[static_cast<Eigen::Index>(q)] = std::log(s / (1.0 - s));
  }
  return eta;
}

CovarianceParams ThetaLink::from_eta(const Eigen::VectorXd& eta, const CovarianceParams& base) const {
  CovarianceParams t = base;
  for (std::size_t q = 0; q < free.size(); ++q) {
    const Bounds& b = bounds[free[q]];
    const double s = 1.0 / (1.0 + std::exp(-eta[static_cast<Eigen::Index>(q)]));
    theta_coord(t, free[q]) = std::clamp(b.lo + (b.hi - b.lo) * s, b.lo, b.hi);
  }
  return t;
}

double ThetaLink::log_jacobian(const Eigen::VectorXd& eta) const {
  double v = 0.0;
  for (std::size_t q = 0; q < free.size(); ++q) {
    const Bounds& b = bounds[free[q]];
    const double e = eta[static_cast<Eigen::Index>(q)];
    // log((hi - lo) s (1 - s)) with s = sigmoid(e)
    v += std::log(b.hi - b.lo) - std::abs(e) - 2.0 * std::log1p(std::exp(-std::abs(e)));
  }
  return v;
}

std::vector<std::vector<int>> color_partitions(const PartitionScheme& scheme, const DirectionBag& bag) {
  const int M = scheme.num_partitions();
  std::vector<std::set<int>> adj(M);
  for (int j = 0; j < M; ++j) {
    std::vector<int> group = {j};
    for (int h = 0; h < bag.size(); ++h) {
      const int s = spatial_neighbor(scheme, bag[h], j);
      if (s >= 0) group.push_back(s);
    }
    const int t = temporal_neighbor(scheme, j);
    if (t >= 0) group.push_back(t);
    for (int a : group) {
      for (int b : group) {
        if (a != b) adj[a].insert(b);
      }
    }
  }
  std::vector<int> color(M, -1);
  int n_colors = 0;
  for (int i = 0; i < M; ++i) {
    std::set<int> used;
    for (int j : adj[i]) {
      if (color[j] >= 0) used.insert(color[j]);
    }
    int c = 0;
    while (used.count(c)) ++c;
    color[i] = c;
    n_colors = std::max(n_colors, c + 1);
  }
  std::vector<std::vector<int>> groups(n_colors);
  for (int i = 0; i < M; ++i) groups[color[i]].push_back(i);
  return groups;
}

Eigen::VectorXd update_beta(const ModelState& state, const ObservedView& obs, const Priors& priors, Rng& rng) {
  const int p = static_cast<int>(priors.mu_beta.size());
  if (p == 0) return Eigen::VectorXd();
  Eigen::LLT<Eigen::MatrixXd> vllt(priors.V_beta);
  Eigen::MatrixXd P = vllt.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::VectorXd b = vllt.solve(priors.mu_beta);
  if (obs.n() > 0) {
    Eigen::VectorXd r = obs.y;
    int q = 0;
    for (int idx : obs.ref_rows) r[q++] -= state.w_S[idx];
    for (int idx : obs.nonref_rows) r[q++] -= state.w_U[idx];
    P += obs.X.transpose() * obs.X / state.tau2;
    b += obs.X.transpose() * r / state.tau2;
  }
  Eigen::MatrixXd L;
  cholesky_with_jitter(0.5 * (P + P.transpose()), P.diagonal().maxCoeff(), L);
  const Eigen::VectorXd mean = L.transpose().triangularView<Eigen::Upper>().solve(
      L.triangularView<Eigen::Lower>().solve(b));
  Eigen::VectorXd xi(p);
  for (int j = 0; j < p; ++j) xi[j] = rng.normal();
  return mean + L.transpose().triangularView<Eigen::Upper>().solve(xi);
}

double update_tau2(const ModelState& state, const ObservedView& obs, const Priors& priors, Rng& rng) {
  double rss = 0.0;
  if (obs.n() > 0) rss = observed_residual(obs, state).squaredNorm();
  return rng.inv_gamma(priors.a_tau + 0.5 * obs.n(), priors.b_tau + 0.5 * rss);
}

std::vector<double> z_log_weights(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                                  int i) {
  const int K = cache.num_directions();
  std::vector<double> lw(K);
  for (int h = 0; h < K; ++h) {
    if (!cache.ready(i, h)) throw_numerical("conditional moments not cached for a candidate direction");
    const double pih = state.pi.pi(i, h);
    lw[h] = pih > 0.0 ? std::log(pih) + partition_latent_terms(cache.get(i, h), data, state, i).log_density
                      : -std::numeric_limits<double>::infinity();
  }
  return lw;
}

std::vector<int> update_z(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                          std::uint64_t seed, int iteration, int threads) {
  const int M = data.num_partitions();
  std::vector<int> z(M);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < M; ++i) {
    Rng rng = substream(seed, iteration, i, Stream::kZ);
    z[i] = rng.categorical_log(z_log_weights(state, data, cache, i));
  }
  return z;
}

MixtureWeights update_pi(const ModelState& state, std::uint64_t seed, int iteration) {
  MixtureWeights out = state.pi;
  const int M = static_cast<int>(state.pi.pi.rows());
  const int K = static_cast<int>(state.pi.pi.cols());
  for (int i = 0; i < M; ++i) {
    Rng rng = substream(seed, iteration, i, Stream::kPi);
    Eigen::VectorXd a = Eigen::VectorXd::Constant(K, state.pi.alpha);
    a[state.z[i]] += 1.0;
    out.pi.row(i) = rng.dirichlet(a).transpose();
  }
  return out;
}

Eigen::VectorXd update_w_partition(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                                   const std::vector<std::vector<int>>& children, int i, Rng& rng,
                                   Eigen::MatrixXd* precision, Eigen::VectorXd* mean_out) {
  const NodeFactor& f = cache.get(i, state.z[i]);
  const int k = f.k;
  if (k == 0) return Eigen::VectorXd();
  const int off = data.ref_offset[i];
  const double inv_s2 = 1.0 / state.theta.sigma2;
  const Eigen::VectorXd w_i = state.w_S.segment(off, k);

  Eigen::MatrixXd P = f.Rinv * inv_s2;
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(k);
  if (f.parent_cols() > 0) eta += inv_s2 * (f.Rinv * (f.H * gather_parent_values(f, data, state.w_S, false)));

  for (int j : children[i]) {
    const NodeFactor& g = cache.get(j, state.z[j]);
    if (g.k == 0) continue;
    const int c = g.ref_col(i);
    const auto Hji = g.H.middleCols(c, k);
    const Eigen::VectorXd e = state.w_S.segment(data.ref_offset[j], g.k) -
                              g.H * gather_parent_values(g, data, state.w_S, false) + Hji * w_i;
    const Eigen::MatrixXd RH = g.Rinv * Hji;
    P.noalias() += inv_s2 * (Hji.transpose() * RH);
    eta.noalias() += inv_s2 * (RH.transpose() * e);
  }

  auto add_nonref = [&](int l) {
    const int nu = data.u_i(l);
    if (nu == 0) return;
    const NodeFactor& g = cache.get(l, state.z[l]);
    const int c = g.nonref_col(i);
    if (c < 0) return;
    const Eigen::VectorXd wp = gather_parent_values(g, data, state.w_S, true);
    const auto Hb = g.Hu.middleCols(c, k);
    const Eigen::VectorXd m = g.Hu * wp;
    const Eigen::VectorXd wu = state.w_U.segment(data.nonref_offset[l], nu);
    const Eigen::VectorXd e = wu - m + Hb * w_i;
    const Eigen::VectorXd prec = (g.Ru.array() * state.theta.sigma2).inverse().matrix();
    P.noalias() += Hb.transpose() * prec.asDiagonal() * Hb;
    eta.noalias() += Hb.transpose() * prec.cwiseProduct(e);
  };
  add_nonref(i);
  for (int j : children[i]) add_nonref(j);

  const double inv_t2 = 1.0 / state.tau2;
  for (int r = 0; r < k; ++r) {
    if (!data.ref_observed[off + r]) continue;
    double resid = data.ref_y[off + r];
    if (data.p > 0) resid -= data.ref_X.row(off + r).dot(state.beta);
    P(r, r) += inv_t2;
    eta[r] += resid * inv_t2;
  }

  Eigen::MatrixXd L;
  cholesky_with_jitter(0.5 * (P + P.transpose()), P.diagonal().maxCoeff(), L);
  const Eigen::VectorXd mean =
      L.transpose().triangularView<Eigen::Upper>().solve(L.triangularView<Eigen::Lower>().solve(eta));
  if (precision != nullptr) *precision = P;
  if (mean_out != nullptr) *mean_out = mean;
  Eigen::VectorXd xi(k);
  for (int r = 0; r < k; ++r) xi[r] = rng.normal();
  return mean + L.transpose().triangularView<Eigen::Upper>().solve(xi);
}

Eigen::VectorXd update_w_nonreference(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                                      std::uint64_t seed, int iteration, int threads) {
  Eigen::VectorXd out = state.w_U;
  const int M = data.num_partitions();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < M; ++i) {
    const int nu = data.u_i(i);
    if (nu == 0) continue;
    Rng rng = substream(seed, iteration, i, Stream::kWNonref);
    const NodeFactor& f = cache.get(i, state.z[i]);
    const Eigen::VectorXd wp =
        f.Hu.cols() > 0 ? gather_parent_values(f, data, state.w_S, true) : Eigen::VectorXd();
    for (int u = 0; u < nu; ++u) {
      const int idx = data.nonref_offset[i] + u;
      const double m = f.Hu.cols() > 0 ? f.Hu.row(u).dot(wp) : 0.0;
      const double R = state.theta.sigma2 * f.Ru[u];
      double mean = m, var = R;
      if (data.nonref_observed[idx]) {
        double resid = data.nonref_y[idx];
        if (data.p > 0) resid -= data.nonref_X.row(idx).dot(state.beta);
        var = 1.0 / (1.0 / R + 1.0 / state.tau2);
        mean = var * (m / R + resid / state.tau2);
      }
      out[idx] = mean + std::sqrt(var) * rng.normal();
    }
  }
  return out;
}

double update_sigma2(const ModelState& state, const PartitionedData& data, const FactorCache& cache,
                     const Priors& priors, Rng& rng) {
  double Q = 0.0;
  long count = 0;
  for (int i = 0; i < data.num_partitions(); ++i) {
    const LatentTerms t = partition_latent_terms(cache.get(i, state.z[i]), data, state, i);
    Q += t.quad;
    count += t.count;
  }
  return rng.inv_gamma(priors.a_sigma + 0.5 * static_cast<double>(count), priors.b_sigma + 0.5 * Q);
}

Sampler::Sampler(const PartitionedData& data, const DirectionBag& bag, const Priors& priors,
                 const ChainSettings& settings, const ModelState& init)
    : data_(data), bag_(bag), priors_(priors), settings_(settings), state_(init), link_(priors) {
  settings_.validate();
  priors_.validate(data.p);
  state_.theta.validate();
  const int M = data.num_partitions();
  if (static_cast<int>(state_.z.size()) != M || state_.w_S.size() != data.k() ||
      state_.w_U.size() != data.num_nonref() || state_.pi.pi.rows() != M || state_.pi.pi.cols() != bag.size() ||
      state_.beta.size() != data.p) {
    throw_config("initial state dimensions do not match the data");
  }
  obs_ = observed_view(data);
  cache_ = FactorCache(data.scheme, bag, RefLayout{&data.ref_points, &data.ref_offset}, &data.nonref_points,
                       &data.nonref_offset);
  proposal_cache_ = cache_;
  cache_.compute(state_.theta.corr(), nullptr, settings_.threads);
  colors_ = color_partitions(data.scheme, bag);
  ram_ = RamAdapter(static_cast<int>(link_.free.size()), settings_.ram_initial_scale, settings_.target_accept,
                    settings_.ram_decay);
}

std::vector<std::vector<int>> Sampler::current_children() const {
  const int M = data_.num_partitions();
  std::vector<std::vector<int>> ch(M);
  for (int j = 0; j < M; ++j) {
    const NodeFactor& f = cache_.get(j, state_.z[j]);
    if (f.sp >= 0) ch[f.sp].push_back(j);
    if (f.tp >= 0) ch[f.tp].push_back(j);
  }
  return ch;
}

void Sampler::step_beta(int it) {
  Rng rng = substream(settings_.seed, it, 0, Stream::kBeta);
  state_.beta = update_beta(state_, obs_, priors_, rng);
}

void Sampler::step_tau2(int it) {
  Rng rng = substream(settings_.seed, it, 0, Stream::kTau2);
  state_.tau2 = update_tau2(state_, obs_, priors_, rng);
}

void Sampler::step_z(int it) { state_.z = update_z(state_, data_, cache_, settings_.seed, it, settings_.threads); }

void Sampler::step_pi(int it) { state_.pi = update_pi(state_, settings_.seed, it); }

void Sampler::step_w_reference(int it) {
  const auto children = current_children();
  auto update_one = [&](int i) {
    Rng rng = substream(settings_.seed, it, i, Stream::kWRef);
    Eigen::VectorXd w = update_w_partition(state_, data_, cache_, children, i, rng);
    if (w.size() > 0) state_.w_S.segment(data_.ref_offset[i], w.size()) = w;
  };
  if (settings_.schedule == WSchedule::kSequential) {
    for (int i = 0; i < data_.num_partitions(); ++i) update_one(i);
    return;
  }
  for (const auto& group : colors_) {
    const int n = static_cast<int>(group.size());
#pragma omp parallel for schedule(dynamic) num_threads(settings_.threads)
    for (int g = 0; g < n; ++g) update_one(group[g]);
  }
}

void Sampler::step_w_nonreference(int it) {
  if (data_.num_nonref() == 0) return;
  state_.w_U = update_w_nonreference(state_, data_, cache_, settings_.seed, it, settings_.threads);
}

double Sampler::theta_log_target(const FactorCache& cache, const ModelState& s) const {
  const int M = data_.num_partitions();
  std::vector<double> parts(M);
#pragma omp parallel for schedule(static) num_threads(settings_.threads)
  for (int i = 0; i < M; ++i) parts[i] = partition_latent_terms(cache.get(i, s.z[i]), data_, s, i).log_density;
  double total = 0.0;
  for (double v : parts) total += v;
  return total;
}

void Sampler::step_theta(int it, bool adapt) {
  if (link_.free.empty()) return;
  Rng rng = substream(settings_.seed, it, 0, Stream::kTheta);
  Eigen::VectorXd eta = link_.to_eta(state_.theta);
  double lt = theta_log_target(cache_, state_) + link_.log_jacobian(eta);
  ModelState proposed = state_;
  auto target = [&](const Eigen::VectorXd& e) {
    proposed.theta = link_.from_eta(e, state_.theta);
    try {
      proposal_cache_.compute(proposed.theta.corr(), &state_.z, settings_.threads);
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
    return theta_log_target(proposal_cache_, proposed) + link_.log_jacobian(e);
  };
  const RamStepResult r = ram_step(eta, lt, target, ram_, rng, adapt);
  ++summary_.theta_proposals;
  if (r.accepted) {
    ++summary_.theta_accepts;
    std::swap(cache_, proposal_cache_);
    state_.theta = proposed.theta;
    cache_.complete(state_.theta.corr(), settings_.threads);
  }
}

void Sampler::step_sigma2(int it) {
  Rng rng = substream(settings_.seed, it, 0, Stream::kSigma2);
  state_.theta.sigma2 = update_sigma2(state_, data_, cache_, priors_, rng);
}

double Sampler::log_joint() const {
  const LogJointTerms t = log_joint_terms(state_, data_, bag_, priors_, &cache_);
  return t.total();
}

void Sampler::iterate(int it, bool adapt) {
  using clock = std::chrono::steady_clock;
  auto run = [&](Step s, bool enabled, auto&& fn) {
    if (!enabled) return;
    const auto t0 = clock::now();
    try {
      fn();
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(it) + ", step " + step_name(s) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("iteration " + std::to_string(it) + ", step " + step_name(s) + ": " + e.what());
    }
    summary_.step_ms[static_cast<int>(s)] +=
        std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  run(Step::kBeta, settings_.update_beta, [&] { step_beta(it); });
  run(Step::kTau2, settings_.update_tau2, [&] { step_tau2(it); });
  run(Step::kZ, settings_.update_z, [&] { step_z(it); });
  run(Step::kPi, settings_.update_pi, [&] { step_pi(it); });
  run(Step::kWRef, settings_.update_w, [&] { step_w_reference(it); });
  run(Step::kWNonref, settings_.update_w, [&] { step_w_nonreference(it); });
  run(Step::kTheta, settings_.update_theta, [&] { step_theta(it, adapt); });
  run(Step::kSigma2, settings_.update_sigma2, [&] { step_sigma2(it); });
}

ModelState initial_state(const PartitionedData& data, const DirectionBag& bag, const Priors& priors,
                         std::uint64_t seed) {
  ModelState s;
  const int M = data.num_partitions();
  const int K = bag.size();
  const ObservedView obs = observed_view(data);
  s.beta = Eigen::VectorXd::Zero(data.p);
  double var = 1.0;
  if (obs.n() > 0) {
    if (data.p > 0) {
      Eigen::MatrixXd A = obs.X.transpose() * obs.X;
      Eigen::LLT<Eigen::MatrixXd> vllt(priors.V_beta);
      A += vllt.solve(Eigen::MatrixXd::Identity(data.p, data.p));
      s.beta = A.ldlt().solve(obs.X.transpose() * obs.y + vllt.solve(priors.mu_beta));
    }
    Eigen::VectorXd r = obs.y;
    if (data.p > 0) r -= obs.X * s.beta;
    if (obs.n() > 1) var = (r.array() - r.mean()).square().sum() / (obs.n() - 1);
    if (!std::isfinite(var)) throw_numerical("residual variance of the response overflows");
    if (!(var > 1e-8)) var = 1.0;
  }
  s.tau2 = 0.1 * var;
  s.theta.sigma2 = 0.9 * var;
  s.theta.a = 0.5 * (priors.a.lo + priors.a.hi);
  s.theta.c = 0.5 * (priors.c.lo + priors.c.hi);
  s.theta.kappa = 0.5 * (priors.kappa.lo + priors.kappa.hi);
  s.pi = MixtureWeights::uniform(M, K, priors.alpha);
  Rng rng = substream(seed, 0, 0, Stream::kInit);
  s.z.resize(M);
  for (int i = 0; i < M; ++i) s.z[i] = static_cast<int>(rng() % static_cast<std::uint64_t>(K));
  s.w_S = Eigen::VectorXd::Zero(data.k());
  s.w_U = Eigen::VectorXd::Zero(data.num_nonref());
  return s;
}

ChainOutput run_chain(const PartitionedData& data, const DirectionBag& bag, const Priors& priors,
                      const ChainSettings& settings, const ModelState* init, const SampleSink& sink) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelState start = init != nullptr ? *init : initial_state(data, bag, priors, settings.seed);
  Sampler sampler(data, bag, priors, settings, start);
  ChainOutput out;
  for (int it = 0; it < settings.n_iter; ++it) {
    sampler.iterate(it, it < settings.n_burn);
    const bool keep = it >= settings.n_burn && (it - settings.n_burn) % settings.thin == settings.thin - 1;
    double lj = std::numeric_limits<double>::quiet_NaN();
    if (settings.trace_log_joint || keep) {
      lj = sampler.log_joint();
      if (keep && !std::isfinite(lj)) {
        throw NumericalError("iteration " + std::to_string(it) + ": log joint is not finite");
      }
    }
    if (settings.trace_log_joint) {
      const auto& s = sampler.state();
      sampler.summary().trace.push_back(
          {it, lj, sampler.summary().theta_accept_rate(), s.tau2, s.theta.sigma2});
    }
    if (keep) {
      const auto& s = sampler.state();
      PosteriorSample ps;
      ps.iteration = it;
      ps.beta = s.beta;
      ps.tau2 = s.tau2;
      ps.theta = s.theta;
      ps.z = s.z;
      ps.pi = s.pi.pi;
      if (settings.keep_w) {
        ps.w_S = s.w_S;
        ps.w_U = s.w_U;
      }
      ps.log_joint = lj;
      if (sink) sink(ps);
      out.samples.push_back(std::move(ps));
    }
  }
  out.summary = sampler.summary();
  out.summary.ram_factor = sampler.ram().S();
  out.summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace gbag
