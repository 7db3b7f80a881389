#include "gbag/conditional_gp.hpp"

#include <cmath>
#include <numbers>

#include "gbag/errors.hpp"

namespace gbag {

ConditionalGp::ConditionalGp(const PartitionScheme& scheme, const DirectionBag& bag, const PointSet& ref_points,
                             const std::vector<int>& ref_offset, const std::vector<int>& z,
                             const CovarianceParams& params, int threads)
    : scheme_(&scheme), refs_(&ref_points), offset_(&ref_offset), params_(params), index_(ref_points) {
  params_.validate();
  config_ = resolve_parents(scheme, bag, z);
  order_ = topological_order(config_);
  const int M = scheme.num_partitions();
  factors_.resize(M);
  const RefLayout layout{refs_, offset_};
  const auto corr = params_.corr();
  const PointsView none{ref_points.dim(), {}, nullptr, 0};
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < M; ++i) {
    factors_[i] = factor_node(layout, i, config_.spatial_parent[i], config_.temporal_parent[i], none, corr);
  }
}

std::vector<int> ConditionalGp::parent_indices(int i) const {
  const auto& f = factors_[i];
  std::vector<int> idx;
  idx.reserve(f.parent_cols());
  for (int j : {f.sp, f.tp}) {
    if (j < 0) continue;
    for (int r = (*offset_)[j]; r < (*offset_)[j + 1]; ++r) idx.push_back(r);
  }
  return idx;
}

Eigen::VectorXd ConditionalGp::apply_cov(const Eigen::VectorXd& v) const {
  Eigen::VectorXd x = v;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const int i = *it;
    const auto& f = factors_[i];
    if (f.k == 0 || f.parent_cols() == 0) continue;
    const Eigen::VectorXd contrib = f.H.transpose() * x.segment((*offset_)[i], f.k);
    if (f.sp >= 0) x.segment((*offset_)[f.sp], f.k_sp) += contrib.head(f.k_sp);
    if (f.tp >= 0) x.segment((*offset_)[f.tp], f.k_tp) += contrib.tail(f.k_tp);
  }
  for (int i = 0; i < scheme_->num_partitions(); ++i) {
    const auto& f = factors_[i];
    if (f.k == 0) continue;
    auto seg = x.segment((*offset_)[i], f.k);
    const Eigen::VectorXd t = f.L.transpose() * seg;
    seg = params_.sigma2 * (f.L * t);
  }
  for (int i : order_) {
    const auto& f = factors_[i];
    if (f.k == 0 || f.parent_cols() == 0) continue;
    Eigen::VectorXd wp(f.parent_cols());
    if (f.sp >= 0) wp.head(f.k_sp) = x.segment((*offset_)[f.sp], f.k_sp);
    if (f.tp >= 0) wp.tail(f.k_tp) = x.segment((*offset_)[f.tp], f.k_tp);
    x.segment((*offset_)[i], f.k) += f.H * wp;
  }
  return x;
}

Eigen::MatrixXd ConditionalGp::dense_cov() const {
  const int n = k();
  Eigen::MatrixXd C(n, n);
  for (int j = 0; j < n; ++j) C.col(j) = apply_cov(Eigen::VectorXd::Unit(n, j));
  return 0.5 * (C + C.transpose());
}

Eigen::SparseMatrix<double> ConditionalGp::precision() const {
  std::vector<Eigen::Triplet<double>> trip;
  const double inv_s2 = 1.0 / params_.sigma2;
  for (int j = 0; j < scheme_->num_partitions(); ++j) {
    const auto& f = factors_[j];
    if (f.k == 0) continue;
    // Row block j of (I - H): identity at j, -H at each parent.
    std::vector<std::pair<int, Eigen::MatrixXd>> B;
    B.emplace_back((*offset_)[j], Eigen::MatrixXd::Identity(f.k, f.k));
    if (f.sp >= 0) B.emplace_back((*offset_)[f.sp], -f.H.leftCols(f.k_sp));
    if (f.tp >= 0) B.emplace_back((*offset_)[f.tp], -f.H.rightCols(f.k_tp));
    for (const auto& [ra, Ba] : B) {
      const Eigen::MatrixXd RB = f.Rinv * Ba;
      for (const auto& [rb, Bb] : B) {
        const Eigen::MatrixXd blk = inv_s2 * (RB.transpose() * Bb);
        for (Eigen::Index c = 0; c < blk.cols(); ++c) {
          for (Eigen::Index r = 0; r < blk.rows(); ++r) {
            trip.emplace_back(ra + static_cast<int>(r), rb + static_cast<int>(c), blk(r, c));
          }
        }
      }
    }
  }
  Eigen::SparseMatrix<double> Q(k(), k());
  Q.setFromTriplets(trip.begin(), trip.end());
  return Q;
}

double ConditionalGp::log_density(const Eigen::VectorXd& w) const {
  if (w.size() != k()) throw_config("latent vector length does not match the reference set");
  double total = 0.0;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (int i = 0; i < scheme_->num_partitions(); ++i) {
    const auto& f = factors_[i];
    if (f.k == 0) continue;
    Eigen::VectorXd e = w.segment((*offset_)[i], f.k);
    if (f.parent_cols() > 0) {
      Eigen::VectorXd wp(f.parent_cols());
      if (f.sp >= 0) wp.head(f.k_sp) = w.segment((*offset_)[f.sp], f.k_sp);
      if (f.tp >= 0) wp.tail(f.k_tp) = w.segment((*offset_)[f.tp], f.k_tp);
      e -= f.H * wp;
    }
    f.L.triangularView<Eigen::Lower>().solveInPlace(e);
    total += -0.5 * (f.k * (log2pi + std::log(params_.sigma2)) + f.logdet_R + e.squaredNorm() / params_.sigma2);
  }
  return total;
}

Eigen::VectorXd ConditionalGp::sample(Rng& rng) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k());
  const double s = std::sqrt(params_.sigma2);
  for (int i : order_) {
    const auto& f = factors_[i];
    if (f.k == 0) continue;
    Eigen::VectorXd xi(f.k);
    for (int r = 0; r < f.k; ++r) xi[r] = rng.normal();
    Eigen::VectorXd wi = s * (f.L * xi);
    if (f.parent_cols() > 0) {
      Eigen::VectorXd wp(f.parent_cols());
      if (f.sp >= 0) wp.head(f.k_sp) = w.segment((*offset_)[f.sp], f.k_sp);
      if (f.tp >= 0) wp.tail(f.k_tp) = w.segment((*offset_)[f.tp], f.k_tp);
      wi += f.H * wp;
    }
    w.segment((*offset_)[i], f.k) = wi;
  }
  return w;
}

std::vector<ConditionalGp::Embedding> ConditionalGp::embed_many(const PointSet& pts) const {
  std::vector<Embedding> out(pts.size());
  const int M = scheme_->num_partitions();
  std::vector<std::vector<int>> groups(M);
  for (std::size_t q = 0; q < pts.size(); ++q) {
    const int r = index_.find(pts, q);
    if (r >= 0) {
      out[q].idx = {r};
      out[q].coef = {1.0};
      out[q].is_reference = true;
    } else {
      groups[scheme_->assign(pts, q)].push_back(static_cast<int>(q));
    }
  }
  const RefLayout layout{refs_, offset_};
  const auto corr = params_.corr();
  for (int i = 0; i < M; ++i) {
    if (groups[i].empty()) continue;
    const PointSet sub = pts.subset(groups[i]);
    const NodeFactor f =
        factor_node(layout, i, config_.spatial_parent[i], config_.temporal_parent[i], sub.view(), corr);
    std::vector<int> cols;
    for (int j : {i, f.sp, f.tp}) {
      if (j < 0 || (j == i && f.k == 0)) continue;
      for (int r = (*offset_)[j]; r < (*offset_)[j + 1]; ++r) cols.push_back(r);
    }
    for (std::size_t g = 0; g < groups[i].size(); ++g) {
      auto& e = out[groups[i][g]];
      e.idx = cols;
      e.coef.resize(cols.size());
      for (std::size_t c = 0; c < cols.size(); ++c) e.coef[c] = f.Hu(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(c));
      e.resid = params_.sigma2 * f.Ru[static_cast<Eigen::Index>(g)];
    }
  }
  return out;
}

ConditionalGp::Embedding ConditionalGp::embed(const Location& loc) const {
  PointSet p(refs_->dim());
  p.push_back(loc);
  return embed_many(p).front();
}

double ConditionalGp::dot(const Embedding& e, const Eigen::VectorXd& v) {
  double s = 0.0;
  for (std::size_t c = 0; c < e.idx.size(); ++c) s += e.coef[c] * v[e.idx[c]];
  return s;
}

Eigen::VectorXd ConditionalGp::apply_embedding_cov(const Embedding& e) const {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(k());
  for (std::size_t c = 0; c < e.idx.size(); ++c) a[e.idx[c]] += e.coef[c];
  return apply_cov(a);
}

double ConditionalGp::cov(const Location& l1, const Location& l2) const {
  const Embedding e1 = embed(l1);
  const Embedding e2 = embed(l2);
  double v = dot(e2, apply_embedding_cov(e1));
  const bool same = l1.coords == l2.coords && l1.time == l2.time;
  if (same && !e1.is_reference) v += e1.resid;
  return v;
}

Eigen::VectorXd ConditionalGp::cov_to_many(const Location& ref, const PointSet& grid) const {
  const Embedding e0 = embed(ref);
  const Eigen::VectorXd v = apply_embedding_cov(e0);
  const auto emb = embed_many(grid);
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t q = 0; q < grid.size(); ++q) {
    out[static_cast<Eigen::Index>(q)] = dot(emb[q], v);
    if (!e0.is_reference) {
      bool same = grid.time(q) == ref.time;
      for (int a = 0; a < grid.dim() && same; ++a) same = grid.coord(q, a) == ref.coords[a];
      if (same) out[static_cast<Eigen::Index>(q)] += e0.resid;
    }
  }
  return out;
}

MixtureSpec mixture_from_weights(const MixtureWeights& weights, const MarginalOptions& opts) {
  const int M = static_cast<int>(weights.pi.rows());
  const int K = static_cast<int>(weights.pi.cols());
  MixtureSpec spec;
  if (M * std::log(static_cast<double>(K)) <= std::log(opts.guard) + 1e-12) {
    for (BagEnumerator e(K, M, opts.guard); !e.done(); e.next()) {
      const double w = weights.config_probability(e.current());
      if (w > 0.0) spec.configs.push_back({e.current(), w});
    }
    return spec;
  }
  if (!opts.allow_monte_carlo) throw_config("bag enumeration exceeds the guard and Monte Carlo is disabled");
  spec.monte_carlo = true;
  Rng rng = substream(opts.seed, 0, 0, Stream::kUser);
  for (int s = 0; s < opts.mc_samples; ++s) {
    std::vector<int> z(M);
    for (int i = 0; i < M; ++i) {
      double u = rng.uniform();
      int h = 0;
      while (h < K - 1 && (u -= weights.pi(i, h)) > 0.0) ++h;
      z[i] = h;
    }
    spec.configs.push_back({std::move(z), 1.0 / opts.mc_samples});
  }
  return spec;
}

MixtureSpec common_direction_mixture(int M, const std::vector<double>& weights) {
  MixtureSpec spec;
  for (std::size_t h = 0; h < weights.size(); ++h) {
    if (weights[h] > 0.0) spec.configs.push_back({std::vector<int>(M, static_cast<int>(h)), weights[h]});
  }
  return spec;
}

namespace {

MarginalCov combine(const MixtureSpec& mixture, const std::vector<double>& vals) {
  MarginalCov out;
  for (std::size_t s = 0; s < vals.size(); ++s) out.value += mixture.configs[s].weight * vals[s];
  if (mixture.monte_carlo && vals.size() > 1) {
    double var = 0.0;
    for (double v : vals) var += (v - out.value) * (v - out.value);
    var /= static_cast<double>(vals.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(vals.size()));
  }
  return out;
}

}  // namespace

MarginalCov induced_cov_marginal(const Location& l1, const Location& l2, const ProcessContext& ctx,
                                 const MixtureSpec& mixture) {
  std::vector<double> vals;
  vals.reserve(mixture.configs.size());
  for (const auto& wc : mixture.configs) {
    ConditionalGp gp(*ctx.scheme, *ctx.bag, *ctx.ref_points, *ctx.ref_offset, wc.z, ctx.params, ctx.threads);
    vals.push_back(gp.cov(l1, l2));
  }
  return combine(mixture, vals);
}

Eigen::VectorXd cov_surface(const Location& ref, const PointSet& grid, const ProcessContext& ctx,
                            const MixtureSpec& mixture) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const auto& wc : mixture.configs) {
    ConditionalGp gp(*ctx.scheme, *ctx.bag, *ctx.ref_points, *ctx.ref_offset, wc.z, ctx.params, ctx.threads);
    out += wc.weight * gp.cov_to_many(ref, grid);
  }
  return out;
}

Eigen::VectorXd stationary_surface(const Location& ref, const PointSet& grid, const CovarianceParams& params) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  std::vector<double> h(grid.dim());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    for (int a = 0; a < grid.dim(); ++a) h[a] = grid.coord(q, a) - ref.coords[a];
    out[static_cast<Eigen::Index>(q)] = base_cov(h, grid.time(q) - ref.time, params);
  }
  return out;
}

}  // namespace gbag
