#include "gbag/node_factor.hpp"

#include <cmath>

#include "gbag/errors.hpp"

namespace gbag {
namespace {

constexpr double kMinResidual = 1e-12;

void append_range(PointSet& dst, const PointsView& v) {
  double c[kMaxSpatialDim];
  for (std::size_t r = 0; r < v.n; ++r) {
    for (int a = 0; a < v.dim; ++a) c[a] = v.axes[a][r];
    dst.push_back(std::span<const double>(c, v.dim), v.times[r]);
  }
}

}  // namespace

NodeFactor factor_node(const RefLayout& refs, int own, int sp, int tp, const PointsView& u_points,
                       const kernels::CorrParams& corr, const JitterPolicy& jitter) {
  NodeFactor f;
  f.own = own;
  f.k = own >= 0 ? refs.k_i(own) : 0;
  if (sp >= 0 && refs.k_i(sp) > 0) {
    f.sp = sp;
    f.k_sp = refs.k_i(sp);
  }
  if (tp >= 0 && refs.k_i(tp) > 0) {
    f.tp = tp;
    f.k_tp = refs.k_i(tp);
  }
  const int p = f.k_sp + f.k_tp;
  const int n = p + f.k;

  PointSet J(refs.points->dim());
  J.reserve(n);
  if (f.sp >= 0) append_range(J, refs.view(f.sp));
  if (f.tp >= 0) append_range(J, refs.view(f.tp));
  if (f.k > 0) append_range(J, refs.view(own));

  Eigen::MatrixXd LJ;
  if (n > 0) {
    const Eigen::MatrixXd CJ = corr_block(J.view(), J.view(), corr);
    f.jitter = cholesky_with_jitter(CJ, 1.0, LJ, jitter);
  }

  if (f.k > 0) {
    f.L = LJ.bottomRightCorner(f.k, f.k);
    f.logdet_R = 2.0 * f.L.diagonal().array().log().sum();
    Eigen::MatrixXd Linv = f.L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(f.k, f.k));
    f.Rinv = Linv.transpose() * Linv;
    if (p > 0) {
      // H = L21 L11^{-1}
      Eigen::MatrixXd Ht = LJ.topLeftCorner(p, p).transpose().triangularView<Eigen::Upper>().solve(
          LJ.bottomLeftCorner(f.k, p).transpose());
      f.H = Ht.transpose();
    } else {
      f.H.resize(f.k, 0);
    }
  } else {
    f.H.resize(0, p);
    f.L.resize(0, 0);
    f.Rinv.resize(0, 0);
  }

  const Eigen::Index nu = static_cast<Eigen::Index>(u_points.n);
  f.Hu.resize(nu, n);
  f.Ru.resize(nu);
  if (nu > 0) {
    if (n == 0) {
      f.Ru.setConstant(1.0);
    } else {
      Eigen::MatrixXd V = corr_block(J.view(), u_points, corr);  // n x nu
      LJ.triangularView<Eigen::Lower>().solveInPlace(V);
      f.Ru = (1.0 - V.colwise().squaredNorm().array()).max(kMinResidual).matrix().transpose();
      LJ.transpose().triangularView<Eigen::Upper>().solveInPlace(V);
      // V^T columns are ordered [sp, tp, own]; Hu uses [own, sp, tp].
      f.Hu.leftCols(f.k) = V.bottomRows(f.k).transpose();
      f.Hu.rightCols(p) = V.topRows(p).transpose();
    }
  }
  return f;
}

FactorCache::FactorCache(const PartitionScheme& scheme, const DirectionBag& bag, RefLayout refs,
                         const PointSet* nonref, const std::vector<int>* nonref_offset)
    : refs_(refs), nonref_(nonref), nonref_offset_(nonref_offset), K_(bag.size()) {
  const int M = scheme.num_partitions();
  sp_.assign(M, std::vector<int>(K_, -1));
  tp_.assign(M, -1);
  slot_of_.assign(M, std::vector<int>(K_, 0));
  slot_sp_.assign(M, {});
  slots_.assign(M, {});
  valid_.assign(M, {});
  for (int i = 0; i < M; ++i) {
    const int t = temporal_neighbor(scheme, i);
    tp_[i] = (t >= 0 && refs_.k_i(t) > 0) ? t : -1;
    for (int h = 0; h < K_; ++h) {
      int s = spatial_neighbor(scheme, bag[h], i);
      if (s >= 0 && refs_.k_i(s) == 0) s = -1;
      sp_[i][h] = s;
      int slot = -1;
      for (std::size_t q = 0; q < slot_sp_[i].size(); ++q) {
        if (slot_sp_[i][q] == s) slot = static_cast<int>(q);
      }
      if (slot < 0) {
        slot = static_cast<int>(slot_sp_[i].size());
        slot_sp_[i].push_back(s);
      }
      slot_of_[i][h] = slot;
    }
    slots_[i].resize(slot_sp_[i].size());
    valid_[i].assign(slot_sp_[i].size(), 0);
  }
}

PointsView FactorCache::u_view(int i) const {
  if (nonref_ == nullptr) return PointsView{refs_.points->dim(), {}, nullptr, 0};
  return nonref_->view((*nonref_offset_)[i], (*nonref_offset_)[i + 1]);
}

void FactorCache::compute_slots(const std::vector<std::pair<int, int>>& work, const kernels::CorrParams& corr,
                                int threads, const JitterPolicy& jitter) {
  const int nw = static_cast<int>(work.size());
  std::vector<std::string> errors(nw);
  bool failed = false;
#pragma omp parallel for schedule(dynamic) num_threads(threads) reduction(|| : failed)
  for (int w = 0; w < nw; ++w) {
    const auto [i, q] = work[w];
    try {
      slots_[i][q] = factor_node(refs_, i, slot_sp_[i][q], tp_[i], u_view(i), corr, jitter);
      valid_[i][q] = 1;
    } catch (const std::exception& e) {
      errors[w] = "partition " + std::to_string(i) + ": " + e.what();
      failed = true;
    }
  }
  if (failed) {
    for (const auto& e : errors) {
      if (!e.empty()) throw_numerical(e);
    }
  }
}

void FactorCache::compute(const kernels::CorrParams& corr, const std::vector<int>* z, int threads,
                          const JitterPolicy& jitter) {
  std::vector<std::pair<int, int>> work;
  for (int i = 0; i < num_partitions(); ++i) {
    std::fill(valid_[i].begin(), valid_[i].end(), 0);
    if (z != nullptr) {
      work.emplace_back(i, slot_of_[i][(*z)[i]]);
    } else {
      for (int q = 0; q < num_slots(i); ++q) work.emplace_back(i, q);
    }
  }
  compute_slots(work, corr, threads, jitter);
}

void FactorCache::complete(const kernels::CorrParams& corr, int threads, const JitterPolicy& jitter) {
  std::vector<std::pair<int, int>> work;
  for (int i = 0; i < num_partitions(); ++i) {
    for (int q = 0; q < num_slots(i); ++q) {
      if (!valid_[i][q]) work.emplace_back(i, q);
    }
  }
  compute_slots(work, corr, threads, jitter);
}

}  // namespace gbag
