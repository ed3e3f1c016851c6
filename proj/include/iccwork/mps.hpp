#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "iccwork/errors.hpp"
#include "iccwork/local_basis.hpp"
#include "iccwork/mpo.hpp"

namespace iccwork {

/// Site tensor A[s] (dl x dr) for each local state s.
struct MpsTensor {
  std::vector<Eigen::MatrixXd> blocks;

  int d() const noexcept { return static_cast<int>(blocks.size()); }
  Eigen::Index dl() const { return blocks.front().rows(); }
  Eigen::Index dr() const { return blocks.front().cols(); }

  /// [A_0; A_1; ...] : (d dl) x dr
  Eigen::MatrixXd stacked_rows() const {
    Eigen::MatrixXd m(d() * dl(), dr());
    for (int s = 0; s < d(); ++s) m.middleRows(s * dl(), dl()) = blocks[static_cast<std::size_t>(s)];
    return m;
  }
  /// [A_0 | A_1 | ...] : dl x (d dr)
  Eigen::MatrixXd stacked_cols() const {
    Eigen::MatrixXd m(dl(), d() * dr());
    for (int s = 0; s < d(); ++s) m.middleCols(s * dr(), dr()) = blocks[static_cast<std::size_t>(s)];
    return m;
  }
  static MpsTensor from_rows(const Eigen::MatrixXd& m, int d) {
    MpsTensor t;
    const Eigen::Index dl = m.rows() / d;
    for (int s = 0; s < d; ++s) t.blocks.push_back(m.middleRows(s * dl, dl));
    return t;
  }
  static MpsTensor from_cols(const Eigen::MatrixXd& m, int d) {
    MpsTensor t;
    const Eigen::Index dr = m.cols() / d;
    for (int s = 0; s < d; ++s) t.blocks.push_back(m.middleCols(s * dr, dr));
    return t;
  }
};

struct Mps {
  std::vector<MpsTensor> sites;
  LocalBasisSpec basis;

  int length() const noexcept { return static_cast<int>(sites.size()); }
  int local_dim() const { return basis.dim(); }
  Eigen::Index max_bond() const {
    Eigen::Index chi = 1;
    for (const auto& t : sites) chi = std::max(chi, t.dr());
    return chi;
  }
};

/// Product state with seeded random amplitudes on even local levels (the ground
/// state is parity even); amplitude 0 gives the reference-oscillator vacuum.
inline Mps product_state(int L, const LocalBasisSpec& basis, std::uint64_t seed, double amplitude = 0.1) {
  basis.validate();
  require(L >= 1, ErrorKind::InvalidArgument, "L must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Mps mps;
  mps.basis = basis;
  const int d = basis.dim();
  for (int j = 0; j < L; ++j) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
    c(0) = 1.0;
    for (int n = 2; n < d; n += 2) c(n) = amplitude * unif(rng) / n;
    c.normalize();
    MpsTensor t;
    for (int s = 0; s < d; ++s) t.blocks.push_back(Eigen::MatrixXd::Constant(1, 1, c(s)));
    mps.sites.push_back(std::move(t));
  }
  return mps;
}

/// Right-canonicalize sites L-1 .. 1 by LQ; all weight moves into site 0.
inline void right_canonicalize(Mps& mps) {
  const int d = mps.local_dim();
  for (int j = mps.length() - 1; j > 0; --j) {
    const Eigen::MatrixXd m = mps.sites[static_cast<std::size_t>(j)].stacked_cols();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m.transpose());
    const Eigen::Index k = std::min(m.rows(), m.cols());
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.cols(), k);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    mps.sites[static_cast<std::size_t>(j)] = MpsTensor::from_cols(q.transpose(), d);
    for (auto& b : mps.sites[static_cast<std::size_t>(j - 1)].blocks) b = (b * r.transpose()).eval();
  }
}

inline double norm_squared(const Mps& mps) {
  Eigen::MatrixXd env = Eigen::MatrixXd::Ones(1, 1);
  for (const auto& t : mps.sites) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(t.dr(), t.dr());
    for (const auto& a : t.blocks) next.noalias() += a.transpose() * env * a;
    env = std::move(next);
  }
  return env(0, 0);
}

/// Dense state vector, site 0 most significant. Small chains only.
inline Eigen::VectorXd to_dense(const Mps& mps) {
  const int d = mps.local_dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Ones(1, 1);  // rows: configurations so far, cols: bond
  for (const auto& t : mps.sites) {
    require(acc.rows() * d <= 1'000'000, ErrorKind::DimensionTooLarge, "to_dense limited to 1e6 amplitudes");
    Eigen::MatrixXd next(acc.rows() * d, t.dr());
    for (Eigen::Index i = 0; i < acc.rows(); ++i)
      for (int s = 0; s < d; ++s) next.row(i * d + s) = acc.row(i) * t.blocks[static_cast<std::size_t>(s)];
    acc = std::move(next);
  }
  return acc.col(0);
}

// ---------------------------------------------------------------------------
// Environments

struct EnvBlock {
  OpKind kind = OpKind::Zero;
  Eigen::MatrixXd m;
};
using Environment = std::vector<EnvBlock>;

inline Environment boundary_environment(int width, int channel) {
  Environment env(static_cast<std::size_t>(width));
  env[static_cast<std::size_t>(channel)] = {OpKind::Identity, Eigen::MatrixXd::Identity(1, 1)};
  return env;
}

inline Eigen::MatrixXd env_matrix(const EnvBlock& b, Eigen::Index n) {
  return b.kind == OpKind::Identity ? Eigen::MatrixXd::Identity(n, n) : b.m;
}

namespace detail {

// sum_s O(s', s) X_s for each s'
inline std::vector<Eigen::MatrixXd> apply_local(const MpoOp& op, const std::vector<Eigen::MatrixXd>& x) {
  if (op.kind == OpKind::Identity) return x;
  const int d = static_cast<int>(x.size());
  std::vector<Eigen::MatrixXd> out(x.size(), Eigen::MatrixXd::Zero(x.front().rows(), x.front().cols()));
  for (int sp = 0; sp < d; ++sp)
    for (int s = 0; s < d; ++s) {
      const double w = op.m(sp, s);
      if (w != 0.0) out[static_cast<std::size_t>(sp)] += w * x[static_cast<std::size_t>(s)];
    }
  return out;
}

}  // namespace detail

/// Absorb site tensor `a` into a left environment. With `canonical`, paths that
/// carry only identities stay flagged as identity (valid for left-canonical a).
inline Environment extend_left(const Environment& env, const MpsTensor& a, const MpoSite& w, bool canonical) {
  Environment out(static_cast<std::size_t>(w.wr));
  const Eigen::Index dl = a.dl();
  std::vector<std::vector<Eigen::MatrixXd>> t(static_cast<std::size_t>(w.wl));
  for (int ch = 0; ch < w.wl; ++ch) {
    const auto& e = env[static_cast<std::size_t>(ch)];
    if (e.kind == OpKind::Zero) continue;
    auto& tc = t[static_cast<std::size_t>(ch)];
    for (const auto& blk : a.blocks) tc.push_back(e.kind == OpKind::Identity ? blk : Eigen::MatrixXd(e.m * blk));
  }
  for (int b = 0; b < w.wr; ++b) {
    int contributions = 0;
    bool pure_identity = true;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(a.dr(), a.dr());
    for (int ch = 0; ch < w.wl; ++ch) {
      const auto& e = env[static_cast<std::size_t>(ch)];
      const MpoOp& op = w.at(ch, b);
      if (e.kind == OpKind::Zero || op.kind == OpKind::Zero) continue;
      ++contributions;
      pure_identity = pure_identity && e.kind == OpKind::Identity && op.kind == OpKind::Identity;
      const auto x = detail::apply_local(op, t[static_cast<std::size_t>(ch)]);
      for (int s = 0; s < a.d(); ++s) acc.noalias() += a.blocks[static_cast<std::size_t>(s)].transpose() * x[static_cast<std::size_t>(s)];
    }
    (void)dl;
    if (contributions == 0) continue;
    if (canonical && contributions == 1 && pure_identity) out[static_cast<std::size_t>(b)] = {OpKind::Identity, {}};
    else out[static_cast<std::size_t>(b)] = {OpKind::General, std::move(acc)};
  }
  return out;
}

/// Absorb site tensor `a` into a right environment (right-canonical a for `canonical`).
inline Environment extend_right(const Environment& env, const MpsTensor& a, const MpoSite& w, bool canonical) {
  Environment out(static_cast<std::size_t>(w.wl));
  // t[c][s] = A_s R[c]^T  (dl x dr), so that A_s' R A_s^T = A_s' (t_s)^T... kept explicit below
  std::vector<std::vector<Eigen::MatrixXd>> t(static_cast<std::size_t>(w.wr));
  for (int ch = 0; ch < w.wr; ++ch) {
    const auto& e = env[static_cast<std::size_t>(ch)];
    if (e.kind == OpKind::Zero) continue;
    auto& tc = t[static_cast<std::size_t>(ch)];
    for (const auto& blk : a.blocks) tc.push_back(e.kind == OpKind::Identity ? blk : Eigen::MatrixXd(blk * e.m.transpose()));
  }
  for (int ch_a = 0; ch_a < w.wl; ++ch_a) {
    int contributions = 0;
    bool pure_identity = true;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(a.dl(), a.dl());
    for (int ch = 0; ch < w.wr; ++ch) {
      const auto& e = env[static_cast<std::size_t>(ch)];
      const MpoOp& op = w.at(ch_a, ch);
      if (e.kind == OpKind::Zero || op.kind == OpKind::Zero) continue;
      ++contributions;
      pure_identity = pure_identity && e.kind == OpKind::Identity && op.kind == OpKind::Identity;
      // R'(a', a) = sum A_s'(a', b') R(b', b) W(s', s) A_s(a, b) = sum_s' A_s' [sum_s W(s', s) A_s R^T]^T
      const auto x = detail::apply_local(op, t[static_cast<std::size_t>(ch)]);
      for (int s = 0; s < a.d(); ++s) acc.noalias() += a.blocks[static_cast<std::size_t>(s)] * x[static_cast<std::size_t>(s)].transpose();
    }
    if (contributions == 0) continue;
    if (canonical && contributions == 1 && pure_identity) out[static_cast<std::size_t>(ch_a)] = {OpKind::Identity, {}};
    else out[static_cast<std::size_t>(ch_a)] = {OpKind::General, std::move(acc)};
  }
  return out;
}

/// <psi| O |psi> for an arbitrary (not necessarily normalized) MPS.
inline double expectation(const Mps& mps, const Mpo& mpo) {
  require(mps.length() == mpo.length(), ErrorKind::InvalidArgument, "MPS and MPO lengths differ");
  require(mps.local_dim() == mpo.d, ErrorKind::BasisMismatch, "MPS and MPO local dimensions differ");
  Environment env = boundary_environment(mpo.sites.front().wl, mpo.left_channel);
  for (int j = 0; j < mps.length(); ++j)
    env = extend_left(env, mps.sites[static_cast<std::size_t>(j)], mpo.sites[static_cast<std::size_t>(j)], false);
  const auto& e = env[static_cast<std::size_t>(mpo.right_channel)];
  if (e.kind == OpKind::Zero) return 0.0;
  return e.kind == OpKind::Identity ? 1.0 : e.m(0, 0);
}

}  // namespace iccwork
