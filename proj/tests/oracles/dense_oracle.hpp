#pragma once

// Test-only reference computations. Everything here is dense and written from the
// model definition directly; nothing calls into the library.

#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Theta {
  double a = 1.0, c = 1.0, kappa = 0.0, sigma2 = 1.0;
};

using Pt = std::array<double, 3>;  // x, y, t

inline double gneiting(const Pt& p, const Pt& q, const Theta& th) {
  const double h = std::hypot(p[0] - q[0], p[1] - q[1]);
  const double d = th.a * std::abs(p[2] - q[2]) + 1.0;
  return th.sigma2 / d * std::exp(-th.c * h / std::pow(d, th.kappa / 2.0));
}

inline Eigen::MatrixXd base(const std::vector<Pt>& A, const std::vector<Pt>& B, const Theta& th) {
  Eigen::MatrixXd C(A.size(), B.size());
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < B.size(); ++j) C(i, j) = gneiting(A[i], B[j], th);
  return C;
}

/// Regular lattice of partitions over [0,1]^3, index x + nx (y + ny t).
struct Lattice {
  int nx = 1, ny = 1, nt = 1;
  int size() const { return nx * ny * nt; }
  int index(int x, int y, int t) const {
    if (x < 0 || y < 0 || t < 0 || x >= nx || y >= ny || t >= nt) return -1;
    return x + nx * (y + ny * t);
  }
  std::array<int, 3> cell(int i) const { return {i % nx, (i / nx) % ny, i / (nx * ny)}; }
};

/// Parent partitions of each node: spatial (cell + offset[z_i]) then temporal (t - 1),
/// skipping those outside the lattice or without points.
inline std::vector<std::vector<int>> parents(const Lattice& lat, const std::vector<std::array<int, 2>>& offsets,
                                             const std::vector<int>& z, const std::vector<std::vector<Pt>>& pts) {
  std::vector<std::vector<int>> pa(lat.size());
  for (int i = 0; i < lat.size(); ++i) {
    const auto c = lat.cell(i);
    const auto off = offsets[z[i]];
    const int sp = lat.index(c[0] + off[0], c[1] + off[1], c[2]);
    const int tp = lat.index(c[0], c[1], c[2] - 1);
    if (sp >= 0 && !pts[sp].empty()) pa[i].push_back(sp);
    if (tp >= 0 && !pts[tp].empty()) pa[i].push_back(tp);
  }
  return pa;
}

/// Dense covariance of all reference values, ordered by partition then listing order.
/// Built node by node: w_i = H w_pa + e_i with H, R from the base covariance.
inline Eigen::MatrixXd dag_cov(const std::vector<std::vector<Pt>>& pts, const std::vector<std::vector<int>>& pa,
                               const Theta& th) {
  const int M = static_cast<int>(pts.size());
  std::vector<int> start(M + 1, 0);
  for (int i = 0; i < M; ++i) start[i + 1] = start[i] + static_cast<int>(pts[i].size());
  const int k = start[M];
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
  std::vector<char> done(M, 0);
  int remaining = M;
  while (remaining > 0) {
    bool progress = false;
    for (int i = 0; i < M; ++i) {
      if (done[i]) continue;
      bool ready = true;
      for (int p : pa[i]) ready = ready && done[p];
      if (!ready) continue;
      const int ki = static_cast<int>(pts[i].size());
      if (ki > 0) {
        std::vector<Pt> ppts;
        std::vector<int> pidx;
        for (int p : pa[i]) {
          for (std::size_t r = 0; r < pts[p].size(); ++r) {
            ppts.push_back(pts[p][r]);
            pidx.push_back(start[p] + static_cast<int>(r));
          }
        }
        const Eigen::MatrixXd Cii = base(pts[i], pts[i], th);
        if (pidx.empty()) {
          G.block(start[i], start[i], ki, ki) = Cii;
        } else {
          const Eigen::MatrixXd Cip = base(pts[i], ppts, th);
          const Eigen::MatrixXd Cpp = base(ppts, ppts, th);
          const Eigen::MatrixXd H = Cpp.ldlt().solve(Cip.transpose()).transpose();
          const Eigen::MatrixXd R = Cii - H * Cip.transpose();
          const int np = static_cast<int>(pidx.size());
          // Covariance of the parents with everything computed so far.
          Eigen::MatrixXd Gp(np, k);
          for (int r = 0; r < np; ++r) Gp.row(r) = G.row(pidx[r]);
          Eigen::MatrixXd Gpp(np, np);
          for (int r = 0; r < np; ++r)
            for (int s = 0; s < np; ++s) Gpp(r, s) = G(pidx[r], pidx[s]);
          const Eigen::MatrixXd cross = H * Gp;  // ki x k, valid on finished columns
          for (int j = 0; j < M; ++j) {
            if (!done[j]) continue;
            const int kj = static_cast<int>(pts[j].size());
            G.block(start[i], start[j], ki, kj) = cross.middleCols(start[j], kj);
            G.block(start[j], start[i], kj, ki) = cross.middleCols(start[j], kj).transpose();
          }
          G.block(start[i], start[i], ki, ki) = H * Gpp * H.transpose() + R;
        }
      }
      done[i] = 1;
      --remaining;
      progress = true;
    }
    if (!progress) return Eigen::MatrixXd();  // cycle
  }
  return G;
}

/// Joint covariance of (w_S, w_U). Each u conditions on the references of its own
/// partition and of that partition's parents (own block first).
inline Eigen::MatrixXd joint_cov_with_u(const std::vector<std::vector<Pt>>& pts,
                                        const std::vector<std::vector<int>>& pa, const std::vector<Pt>& upts,
                                        const std::vector<int>& upart, const Theta& th) {
  const Eigen::MatrixXd G = dag_cov(pts, pa, th);
  const int M = static_cast<int>(pts.size());
  std::vector<int> start(M + 1, 0);
  for (int i = 0; i < M; ++i) start[i + 1] = start[i] + static_cast<int>(pts[i].size());
  const int k = start[M];
  const int nu = static_cast<int>(upts.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nu, k);  // w_u = A w_S + e_u
  Eigen::VectorXd r(nu);
  for (int q = 0; q < nu; ++q) {
    std::vector<int> blocks{upart[q]};
    for (int p : pa[upart[q]]) blocks.push_back(p);
    std::vector<Pt> J;
    std::vector<int> jidx;
    for (int b : blocks) {
      for (std::size_t s = 0; s < pts[b].size(); ++s) {
        J.push_back(pts[b][s]);
        jidx.push_back(start[b] + static_cast<int>(s));
      }
    }
    const std::vector<Pt> u{upts[q]};
    if (J.empty()) {
      r[q] = th.sigma2;
      continue;
    }
    const Eigen::MatrixXd CuJ = base(u, J, th);
    const Eigen::MatrixXd h = base(J, J, th).ldlt().solve(CuJ.transpose()).transpose();
    r[q] = th.sigma2 - (h * CuJ.transpose())(0, 0);
    for (std::size_t s = 0; s < jidx.size(); ++s) A(q, jidx[s]) = h(0, static_cast<Eigen::Index>(s));
  }
  Eigen::MatrixXd out(k + nu, k + nu);
  out.topLeftCorner(k, k) = G;
  out.bottomLeftCorner(nu, k) = A * G;
  out.topRightCorner(k, nu) = (A * G).transpose();
  out.bottomRightCorner(nu, nu) = A * G * A.transpose();
  out.bottomRightCorner(nu, nu).diagonal() += r;
  return out;
}

inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::MatrixXd& C) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(C);
  const double logdet = ldlt.vectorD().array().log().sum();
  const double quad = x.dot(ldlt.solve(x));
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

/// Gauss-Legendre nodes and weights on [lo, hi].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double lo, double hi) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * z;
    w[i] = (hi - lo) / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

}  // namespace oracle
