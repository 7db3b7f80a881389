#include "gbag/predict.hpp"

#include <algorithm>
#include <cmath>

#include "gbag/errors.hpp"
#include "gbag/node_factor.hpp"

namespace gbag {

double quantile_type7(std::vector<double> v, double prob) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

PredictionResult predict_at(const PointSet& locations, const Eigen::MatrixXd& X_new, const ChainOutput& chain,
                            const PartitionedData& data, const DirectionBag& bag, const PredictOptions& opts) {
  const int n = static_cast<int>(locations.size());
  const int S = static_cast<int>(chain.samples.size());
  if (data.p > 0 && (X_new.rows() != n || X_new.cols() != data.p)) {
    throw_config("prediction covariates do not match locations and covariate count");
  }
  PredictionResult res;
  res.locations = locations;
  res.mean = Eigen::VectorXd::Zero(n);
  res.sd = Eigen::VectorXd::Zero(n);
  res.lo95 = Eigen::VectorXd::Zero(n);
  res.hi95 = Eigen::VectorXd::Zero(n);
  res.w_mean = Eigen::VectorXd::Zero(n);
  if (n == 0) return res;
  if (S == 0) throw_config("prediction needs at least one retained sample");

  const LocationIndex ref_index(data.ref_points);
  const LocationIndex nonref_index(data.nonref_points);
  const int M = data.num_partitions();
  std::vector<int> stored_ref(n, -1), stored_nonref(n, -1);
  std::vector<std::vector<int>> fresh(M), all(M);
  for (int q = 0; q < n; ++q) {
    const int part = data.scheme.assign(locations, q);
    all[part].push_back(q);
    stored_ref[q] = ref_index.find(locations, q);
    if (stored_ref[q] < 0) stored_nonref[q] = nonref_index.find(locations, q);
    if (stored_ref[q] < 0 && stored_nonref[q] < 0) fresh[part].push_back(q);
  }
  std::vector<PointSet> fresh_pts(M, PointSet(locations.dim()));
  for (int i = 0; i < M; ++i) fresh_pts[i] = locations.subset(fresh[i]);

  Eigen::MatrixXd ydraw(n, S);
  Eigen::MatrixXd wdraw(n, S);
  const RefLayout layout{&data.ref_points, &data.ref_offset};

  for (int s = 0; s < S; ++s) {
    const PosteriorSample& smp = chain.samples[s];
    if (smp.w_S.size() != data.k()) throw_config("chain samples do not carry latent values for this data");
    const auto corr = smp.theta.corr();
    const double sd_noise = std::sqrt(smp.tau2);
#pragma omp parallel for schedule(dynamic) num_threads(opts.threads)
    for (int i = 0; i < M; ++i) {
      if (all[i].empty()) continue;
      Rng rng = substream(opts.seed, s, i, Stream::kPredict);
      if (!fresh[i].empty()) {
        const int sp = spatial_neighbor(data.scheme, bag[smp.z[i]], i);
        const int tp = temporal_neighbor(data.scheme, i);
        const NodeFactor f = factor_node(layout, i, sp, tp, fresh_pts[i].view(), corr);
        const Eigen::VectorXd wp =
            f.Hu.cols() > 0 ? gather_parent_values(f, data, smp.w_S, true) : Eigen::VectorXd();
        for (std::size_t g = 0; g < fresh[i].size(); ++g) {
          const Eigen::Index gi = static_cast<Eigen::Index>(g);
          const double m = f.Hu.cols() > 0 ? f.Hu.row(gi).dot(wp) : 0.0;
          wdraw(fresh[i][g], s) = m + std::sqrt(smp.theta.sigma2 * f.Ru[gi]) * rng.normal();
        }
      }
      for (int q : all[i]) {
        if (stored_ref[q] >= 0) {
          wdraw(q, s) = smp.w_S[stored_ref[q]];
        } else if (stored_nonref[q] >= 0) {
          wdraw(q, s) = smp.w_U[stored_nonref[q]];
        }
        double mu = wdraw(q, s) + opts.response_offset;
        if (data.p > 0) mu += X_new.row(q).dot(smp.beta);
        ydraw(q, s) = mu + sd_noise * rng.normal();
      }
    }
  }

  for (int q = 0; q < n; ++q) {
    const Eigen::VectorXd row = ydraw.row(q).transpose();
    res.mean[q] = row.mean();
    res.sd[q] = S > 1 ? std::sqrt((row.array() - res.mean[q]).square().sum() / (S - 1)) : 0.0;
    std::vector<double> v(row.data(), row.data() + S);
    res.lo95[q] = quantile_type7(v, 0.025);
    res.hi95[q] = quantile_type7(std::move(v), 0.975);
    res.w_mean[q] = wdraw.row(q).mean();
  }
  if (opts.keep_draws) res.y_draws = std::move(ydraw);
  return res;
}

MetricReport compute_metrics(const Eigen::VectorXd& truth, const PredictionResult& result) {
  const Eigen::Index n = truth.size();
  if (n != result.mean.size()) throw_config("truth and prediction lengths differ");
  MetricReport m;
  if (n == 0) return m;
  double se = 0.0, ae = 0.0, cover = 0.0, width = 0.0;
  for (Eigen::Index q = 0; q < n; ++q) {
    const double e = result.mean[q] - truth[q];
    se += e * e;
    ae += std::abs(e);
    cover += (truth[q] >= result.lo95[q] && truth[q] <= result.hi95[q]) ? 1.0 : 0.0;
    width += result.hi95[q] - result.lo95[q];
  }
  const double dn = static_cast<double>(n);
  m.rmspe = std::sqrt(se / dn);
  m.mape = ae / dn;
  m.ci_coverage_95 = cover / dn;
  m.ci_width_95 = width / dn;
  return m;
}

DirectionPosterior direction_posterior(const ChainOutput& chain, int K) {
  DirectionPosterior dp;
  if (chain.samples.empty()) throw_config("direction posterior needs at least one retained sample");
  const int M = static_cast<int>(chain.samples.front().z.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(M, K);
  for (const auto& s : chain.samples) {
    for (int i = 0; i < M; ++i) counts(i, s.z[i]) += 1.0;
  }
  dp.prob = counts / static_cast<double>(chain.samples.size());
  dp.mode.resize(M);
  for (int i = 0; i < M; ++i) {
    int best = 0;
    for (int h = 1; h < K; ++h) {
      if (counts(i, h) > counts(i, best)) best = h;
    }
    dp.mode[i] = best;
  }
  return dp;
}

}  // namespace gbag
