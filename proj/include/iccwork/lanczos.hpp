#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "iccwork/errors.hpp"

namespace iccwork {

struct LanczosOptions {
  int krylov_dim = 24;
  int max_restarts = 12;
  double residual_tol = 1e-9;  ///< on ||H v - theta v||, absolute
};

struct LanczosResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  int matvecs = 0;
  bool converged = false;
};

/// Lowest eigenpair of a symmetric operator given as a callable v -> H v.
/// Thick-restarted (restart on the Ritz vector) Lanczos with full reorthogonalization.
template <class Apply>
LanczosResult lowest_eigenpair(const Apply& apply, Eigen::VectorXd start, const LanczosOptions& opt = {}) {
  const Eigen::Index n = start.size();
  require(n > 0, ErrorKind::InvalidArgument, "empty start vector");
  LanczosResult res;
  double nrm = start.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) {
    start = Eigen::VectorXd::Ones(n);
    nrm = start.norm();
  }
  Eigen::VectorXd x = start / nrm;
  if (n == 1) {
    res.vector = x;
    res.value = apply(x)(0);
    res.matvecs = 1;
    res.converged = true;
    return res;
  }
  const int kmax = static_cast<int>(std::min<Eigen::Index>(opt.krylov_dim, n));
  Eigen::MatrixXd V(n, kmax);
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    V.col(0) = x;
    std::vector<double> alpha, beta;
    Eigen::VectorXd ritz;
    double theta = 0.0, resid = 0.0;
    int m = 0;
    for (int k = 0; k < kmax; ++k) {
      Eigen::VectorXd w = apply(V.col(k));
      ++res.matvecs;
      alpha.push_back(V.col(k).dot(w));
      for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
      const double b = w.norm();
      m = k + 1;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(Eigen::Map<Eigen::VectorXd>(alpha.data(), m),
                                Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1), Eigen::ComputeEigenvectors);
      theta = es.eigenvalues()(0);
      ritz = es.eigenvectors().col(0);
      resid = std::abs(b * ritz(m - 1));
      if (resid <= opt.residual_tol || b < 1e-14 || k + 1 == kmax) break;
      beta.push_back(b);
      V.col(k + 1) = w / b;
    }
    require(std::isfinite(theta), ErrorKind::LocalSolverFailure, "Lanczos produced a non-finite Ritz value");
    x = V.leftCols(m) * ritz;
    x.normalize();
    res.value = theta;
    res.residual = resid;
    if (resid <= opt.residual_tol) {
      res.converged = true;
      break;
    }
  }
  res.vector = std::move(x);
  return res;
}

/// Davidson with the diagonal preconditioner (diag - theta)^{-1}; converges in far fewer
/// products than plain Lanczos when the operator is diagonally dominant with a wide spread.
template <class Apply>
LanczosResult davidson_lowest(const Apply& apply, const Eigen::VectorXd& diag, Eigen::VectorXd start,
                              const LanczosOptions& opt = {}) {
  const Eigen::Index n = start.size();
  require(n > 0 && diag.size() == n, ErrorKind::InvalidArgument, "Davidson: size mismatch");
  LanczosResult res;
  double nrm = start.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) {
    start = Eigen::VectorXd::Ones(n);
    nrm = start.norm();
  }
  const int kmax = static_cast<int>(std::min<Eigen::Index>(opt.krylov_dim, n));
  const int max_iter = kmax * (opt.max_restarts + 1);
  Eigen::MatrixXd V(n, kmax), AV(n, kmax);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(kmax, kmax);  // projected operator, grown one column at a time
  V.col(0) = start / nrm;
  AV.col(0) = apply(V.col(0));
  h(0, 0) = V.col(0).dot(AV.col(0));
  ++res.matvecs;
  int m = 1;
  Eigen::VectorXd u = V.col(0), au = AV.col(0);
  double theta = h(0, 0);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.topLeftCorner(m, m));
    theta = es.eigenvalues()(0);
    const Eigen::VectorXd s = es.eigenvectors().col(0);
    u = V.leftCols(m) * s;
    au = AV.leftCols(m) * s;
    const Eigen::VectorXd r = au - theta * u;
    res.residual = r.norm();
    require(std::isfinite(theta) && std::isfinite(res.residual), ErrorKind::LocalSolverFailure,
            "Davidson produced a non-finite Ritz pair");
    if (res.residual <= opt.residual_tol || m == n) {
      res.converged = res.residual <= opt.residual_tol || m == n;
      break;
    }
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double den = diag(i) - theta;
      if (std::abs(den) < 1e-8) den = den < 0.0 ? -1e-8 : 1e-8;
      t(i) = r(i) / den;
    }
    if (m == kmax) {
      // restart on the current Ritz vector
      const double un = u.norm();
      V.col(0) = u / un;
      AV.col(0) = au / un;
      h(0, 0) = V.col(0).dot(AV.col(0));
      m = 1;
    }
    for (int pass = 0; pass < 2; ++pass) t -= V.leftCols(m) * (V.leftCols(m).transpose() * t);
    const double tn = t.norm();
    if (!(tn > 1e-14)) {
      res.converged = false;
      break;
    }
    V.col(m) = t / tn;
    AV.col(m) = apply(V.col(m));
    ++res.matvecs;
    const Eigen::VectorXd col = V.leftCols(m + 1).transpose() * AV.col(m);
    h.block(0, m, m + 1, 1) = col;
    h.block(m, 0, 1, m + 1) = col.transpose();
    ++m;
  }
  res.value = theta;
  res.vector = u / u.norm();
  return res;
}

}  // namespace iccwork
