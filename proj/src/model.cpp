#include "gbag/model.hpp"

#include <cmath>
#include <numbers>

#include "gbag/errors.hpp"

namespace gbag {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

Eigen::VectorXd gather_parent_values(const NodeFactor& f, const PartitionedData& data, const Eigen::VectorXd& w_S,
                                     bool with_own) {
  Eigen::VectorXd wp((with_own ? f.k : 0) + f.parent_cols());
  int pos = 0;
  if (with_own && f.k > 0) {
    wp.segment(pos, f.k) = w_S.segment(data.ref_offset[f.own], f.k);
    pos += f.k;
  }
  if (f.sp >= 0) {
    wp.segment(pos, f.k_sp) = w_S.segment(data.ref_offset[f.sp], f.k_sp);
    pos += f.k_sp;
  }
  if (f.tp >= 0) wp.segment(pos, f.k_tp) = w_S.segment(data.ref_offset[f.tp], f.k_tp);
  return wp;
}

Priors Priors::defaults(int p) {
  Priors pr;
  pr.mu_beta = Eigen::VectorXd::Zero(p);
  pr.V_beta = 100.0 * Eigen::MatrixXd::Identity(p, p);
  return pr;
}

void Priors::validate(int p) const {
  if (mu_beta.size() != p || V_beta.rows() != p || V_beta.cols() != p) {
    throw_config("beta prior dimensions do not match the covariate count");
  }
  if (p > 0) {
    if (!V_beta.isApprox(V_beta.transpose())) throw_config("V_beta must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(V_beta);
    if (llt.info() != Eigen::Success) throw_config("V_beta must be positive definite");
  }
  for (double v : {a_tau, b_tau, a_sigma, b_sigma, alpha}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw_config("prior shapes, scales, and alpha must be positive");
  }
  for (const Bounds* b : {&a, &c, &kappa}) {
    if (!(b->lo <= b->hi) || !std::isfinite(b->lo) || !std::isfinite(b->hi)) {
      throw_config("uniform prior bounds need lo <= hi");
    }
  }
  if (!(a.lo > 0.0) || !(c.lo > 0.0)) throw_config("a and c prior bounds must be positive");
  if (kappa.lo < 0.0 || kappa.hi > 1.0) throw_config("kappa prior bounds must lie in [0, 1]");
}

bool Priors::in_box(const CovarianceParams& theta) const {
  auto in = [](const Bounds& b, double v) { return v >= b.lo && v <= b.hi; };
  return in(a, theta.a) && in(c, theta.c) && in(kappa, theta.kappa);
}

double LogJointTerms::total() const {
  return likelihood + w_reference + w_nonreference + membership + mixture_weights + beta_prior + tau2_prior +
         sigma2_prior + theta_prior;
}

void LogJointTerms::check_finite() const {
  const std::pair<const char*, double> terms[] = {
      {"likelihood", likelihood},        {"w_reference", w_reference}, {"w_nonreference", w_nonreference},
      {"membership", membership},        {"mixture_weights", mixture_weights},
      {"beta_prior", beta_prior},        {"tau2_prior", tau2_prior},   {"sigma2_prior", sigma2_prior},
      {"theta_prior", theta_prior}};
  for (const auto& [name, v] : terms) {
    if (!std::isfinite(v)) throw_numerical(std::string("log joint term '") + name + "' is not finite");
  }
}

ObservedView observed_view(const PartitionedData& data) {
  ObservedView obs;
  for (int r = 0; r < data.k(); ++r) {
    if (data.ref_observed[r]) obs.ref_rows.push_back(r);
  }
  for (int r = 0; r < data.num_nonref(); ++r) {
    if (data.nonref_observed[r]) obs.nonref_rows.push_back(r);
  }
  const int n = static_cast<int>(obs.ref_rows.size() + obs.nonref_rows.size());
  obs.y.resize(n);
  obs.X.resize(n, data.p);
  int q = 0;
  for (int r : obs.ref_rows) {
    obs.y[q] = data.ref_y[r];
    if (data.p > 0) obs.X.row(q) = data.ref_X.row(r);
    ++q;
  }
  for (int r : obs.nonref_rows) {
    obs.y[q] = data.nonref_y[r];
    if (data.p > 0) obs.X.row(q) = data.nonref_X.row(r);
    ++q;
  }
  return obs;
}

Eigen::VectorXd observed_residual(const ObservedView& obs, const ModelState& state) {
  Eigen::VectorXd r = obs.y;
  if (obs.X.cols() > 0) r -= obs.X * state.beta;
  int q = 0;
  for (int idx : obs.ref_rows) r[q++] -= state.w_S[idx];
  for (int idx : obs.nonref_rows) r[q++] -= state.w_U[idx];
  return r;
}

double ref_quadratic(const NodeFactor& f, const PartitionedData& data, const Eigen::VectorXd& w_S, int i) {
  if (f.k == 0) return 0.0;
  Eigen::VectorXd e = w_S.segment(data.ref_offset[i], f.k);
  if (f.parent_cols() > 0) e -= f.H * gather_parent_values(f, data, w_S, false);
  f.L.triangularView<Eigen::Lower>().solveInPlace(e);
  return e.squaredNorm();
}

double nonref_mean(const NodeFactor& f, const PartitionedData& data, const Eigen::VectorXd& w_S, int u_local) {
  if (f.Hu.cols() == 0) return 0.0;
  return f.Hu.row(u_local).dot(gather_parent_values(f, data, w_S, true));
}

LatentTerms partition_latent_terms(const NodeFactor& f, const PartitionedData& data, const ModelState& state, int i,
                                   bool include_reference, bool include_nonreference) {
  LatentTerms t;
  const double s2 = state.theta.sigma2;
  if (include_reference && f.k > 0) {
    t.quad += ref_quadratic(f, data, state.w_S, i);
    t.logdet += f.logdet_R;
    t.count += f.k;
  }
  if (include_nonreference) {
    const int nu = data.u_i(i);
    if (nu > 0) {
      const Eigen::VectorXd wp = f.Hu.cols() > 0 ? gather_parent_values(f, data, state.w_S, true) : Eigen::VectorXd();
      for (int u = 0; u < nu; ++u) {
        const double m = f.Hu.cols() > 0 ? f.Hu.row(u).dot(wp) : 0.0;
        const double e = state.w_U[data.nonref_offset[i] + u] - m;
        t.quad += e * e / f.Ru[u];
        t.logdet += std::log(f.Ru[u]);
      }
      t.count += nu;
    }
  }
  t.log_density = -0.5 * (t.count * (kLog2Pi + std::log(s2)) + t.logdet + t.quad / s2);
  return t;
}

double log_dirichlet(const Eigen::VectorXd& pi, double alpha) {
  const double K = static_cast<double>(pi.size());
  double v = std::lgamma(K * alpha) - K * std::lgamma(alpha);
  for (Eigen::Index h = 0; h < pi.size(); ++h) v += (alpha - 1.0) * std::log(pi[h]);
  return v;
}

double log_inv_gamma(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

LogJointTerms log_joint_terms(const ModelState& state, const PartitionedData& data, const DirectionBag& bag,
                              const Priors& priors, const FactorCache* cache) {
  FactorCache local;
  if (cache == nullptr) {
    local = FactorCache(data.scheme, bag, RefLayout{&data.ref_points, &data.ref_offset}, &data.nonref_points,
                        &data.nonref_offset);
    local.compute(state.theta.corr(), &state.z, 1);
    cache = &local;
  }
  LogJointTerms t;
  const ObservedView obs = observed_view(data);
  if (obs.n() > 0) {
    const Eigen::VectorXd r = observed_residual(obs, state);
    t.likelihood = -0.5 * (obs.n() * (kLog2Pi + std::log(state.tau2)) + r.squaredNorm() / state.tau2);
  }
  const int M = data.num_partitions();
  for (int i = 0; i < M; ++i) {
    const NodeFactor& f = cache->get(i, state.z[i]);
    t.w_reference += partition_latent_terms(f, data, state, i, true, false).log_density;
    t.w_nonreference += partition_latent_terms(f, data, state, i, false, true).log_density;
    t.membership += std::log(state.pi.pi(i, state.z[i]));
    t.mixture_weights += log_dirichlet(state.pi.pi.row(i).transpose(), priors.alpha);
  }
  if (data.p > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(priors.V_beta);
    const Eigen::VectorXd d = state.beta - priors.mu_beta;
    const Eigen::MatrixXd L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    const Eigen::VectorXd s = L.triangularView<Eigen::Lower>().solve(d);
    t.beta_prior = -0.5 * (data.p * kLog2Pi + logdet + s.squaredNorm());
  }
  t.tau2_prior = log_inv_gamma(state.tau2, priors.a_tau, priors.b_tau);
  t.sigma2_prior = log_inv_gamma(state.theta.sigma2, priors.a_sigma, priors.b_sigma);
  auto log_unif = [](const Bounds& b, double v) {
    if (b.fixed()) return v == b.lo ? 0.0 : -std::numeric_limits<double>::infinity();
    return (v >= b.lo && v <= b.hi) ? -std::log(b.hi - b.lo) : -std::numeric_limits<double>::infinity();
  };
  t.theta_prior = log_unif(priors.a, state.theta.a) + log_unif(priors.c, state.theta.c) +
                  log_unif(priors.kappa, state.theta.kappa);
  (void)bag;
  return t;
}

double log_joint(const ModelState& state, const PartitionedData& data, const DirectionBag& bag, const Priors& priors,
                 const FactorCache* cache) {
  const LogJointTerms t = log_joint_terms(state, data, bag, priors, cache);
  t.check_finite();
  return t.total();
}

double purpleair_calibrate(double pa_cf1, double rh) {
  if (!(pa_cf1 >= 0.0)) throw_config("sensor reading must be non-negative");
  if (!(rh >= 0.0 && rh <= 100.0)) throw_config("relative humidity must lie in [0, 100]");
  if (pa_cf1 <= 343.0) return 5.75 + 0.52 * pa_cf1 - 0.09 * rh;
  return 2.97 + 0.46 * pa_cf1 + 3.93e-4 * pa_cf1 * pa_cf1;
}

}  // namespace gbag
