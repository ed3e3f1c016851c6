#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "iccwork/errors.hpp"
#include "iccwork/local_basis.hpp"
#include "iccwork/model.hpp"

namespace iccwork {

enum class OpKind { Zero, Identity, General };

struct MpoOp {
  OpKind kind = OpKind::Zero;
  Eigen::MatrixXd m;  ///< only for General

  static MpoOp zero() { return {}; }
  static MpoOp identity() { return {OpKind::Identity, {}}; }
  static MpoOp general(Eigen::MatrixXd m) { return {OpKind::General, std::move(m)}; }

  Eigen::MatrixXd dense(int d) const {
    switch (kind) {
      case OpKind::Zero: return Eigen::MatrixXd::Zero(d, d);
      case OpKind::Identity: return Eigen::MatrixXd::Identity(d, d);
      case OpKind::General: return m;
    }
    return {};
  }
};

struct MpoSite {
  int wl = 0;
  int wr = 0;
  std::vector<MpoOp> ops;  ///< row-major (a, b)

  const MpoOp& at(int a, int b) const { return ops[static_cast<std::size_t>(a * wr + b)]; }
  MpoOp& at(int a, int b) { return ops[static_cast<std::size_t>(a * wr + b)]; }
};

/// Operator-valued matrix product. The chain is closed by picking channel
/// `left_channel` on the first site's left bond and `right_channel` on the last
/// site's right bond.
struct Mpo {
  std::vector<MpoSite> sites;
  int d = 0;
  int left_channel = 0;
  int right_channel = 0;

  int length() const noexcept { return static_cast<int>(sites.size()); }
  int bond_dimension() const {
    int w = 0;
    for (const auto& s : sites) w = std::max({w, s.wl, s.wr});
    return w;
  }
};

struct MpoHamiltonian {
  Mpo mpo;
  ModelParams params;
  LocalBasisSpec basis;
  double pinning = 0.0;
};

/// On-site operator of site j on an open chain with free ends.
inline Eigen::MatrixXd onsite_operator(const ModelParams& p, const LocalOperators& ops, int j,
                                       double pinning, double shift) {
  const auto& c = p.constants;
  const int bonds = p.L == 1 ? 0 : ((j == 0 || j == p.L - 1) ? 1 : 2);
  Eigen::MatrixXd h = ops.kinetic + 0.5 * (p.omega_sq - c.h1 + bonds * c.h2) * ops.y2 + 0.5 * c.h3 * ops.y4;
  if (pinning != 0.0) h += ((j % 2 == 0) ? pinning : -pinning) * ops.y;
  if (shift != 0.0) h.diagonal().array() += shift;
  return h;
}

/// Lower-triangular bond-3 MPO: channel 2 = "nothing placed yet", 1 = "y placed,
/// waiting for its neighbour", 0 = "complete". `shift` adds shift * identity per site.
inline MpoHamiltonian build_mpo(const ModelParams& p, const LocalBasisSpec& basis, double pinning = 0.0,
                                double shift = 0.0) {
  p.validate();
  basis.validate();
  require(p.boundary == Boundary::open, ErrorKind::InvalidArgument, "the MPO is built for open chains");
  require(p.L >= 2, ErrorKind::InvalidArgument, "the MPO needs L >= 2");
  const auto ops = local_operators(p.g, basis);
  MpoHamiltonian out;
  out.params = p;
  out.basis = basis;
  out.pinning = pinning;
  out.mpo.d = basis.dim();
  out.mpo.left_channel = 2;
  out.mpo.right_channel = 0;
  for (int j = 0; j < p.L; ++j) {
    MpoSite site;
    site.wl = site.wr = 3;
    site.ops.resize(9);
    site.at(0, 0) = MpoOp::identity();
    site.at(1, 0) = MpoOp::general(ops.y);
    site.at(2, 0) = MpoOp::general(onsite_operator(p, ops, j, pinning, shift));
    site.at(2, 1) = MpoOp::general(p.constants.h2 * ops.y);
    site.at(2, 2) = MpoOp::identity();
    out.mpo.sites.push_back(std::move(site));
  }
  return out;
}

/// The MPO of A * A (physical products W[a][b] W[a'][b'] on channel pairs).
inline Mpo square(const Mpo& a) {
  Mpo out;
  out.d = a.d;
  const int w0 = a.sites.empty() ? 0 : a.sites.front().wl;
  out.left_channel = a.left_channel * w0 + a.left_channel;
  for (const auto& s : a.sites) {
    MpoSite q;
    q.wl = s.wl * s.wl;
    q.wr = s.wr * s.wr;
    q.ops.resize(static_cast<std::size_t>(q.wl * q.wr));
    for (int a1 = 0; a1 < s.wl; ++a1)
      for (int a2 = 0; a2 < s.wl; ++a2)
        for (int b1 = 0; b1 < s.wr; ++b1)
          for (int b2 = 0; b2 < s.wr; ++b2) {
            const MpoOp& x = s.at(a1, b1);
            const MpoOp& y = s.at(a2, b2);
            MpoOp& r = q.at(a1 * s.wl + a2, b1 * s.wr + b2);
            if (x.kind == OpKind::Zero || y.kind == OpKind::Zero) continue;
            if (x.kind == OpKind::Identity && y.kind == OpKind::Identity) r = MpoOp::identity();
            else r = MpoOp::general(x.dense(a.d) * y.dense(a.d));
          }
    out.sites.push_back(std::move(q));
  }
  const int wl = a.sites.empty() ? 0 : a.sites.back().wr;
  out.right_channel = a.right_channel * wl + a.right_channel;
  return out;
}

/// Full matrix in the product basis, site 0 most significant. Small chains only.
inline Eigen::MatrixXd contract_dense(const Mpo& mpo) {
  require(!mpo.sites.empty(), ErrorKind::InvalidArgument, "empty MPO");
  std::size_t dim = 1;
  for (int j = 0; j < mpo.length(); ++j) {
    dim *= static_cast<std::size_t>(mpo.d);
    require(dim <= 5000, ErrorKind::DimensionTooLarge, "dense MPO contraction limited to 5000 states");
  }
  std::vector<Eigen::MatrixXd> acc(static_cast<std::size_t>(mpo.sites.front().wl));
  for (auto& m : acc) m = Eigen::MatrixXd::Zero(1, 1);
  acc[static_cast<std::size_t>(mpo.left_channel)](0, 0) = 1.0;
  for (const auto& s : mpo.sites) {
    const Eigen::Index n = acc.front().rows() * mpo.d;
    std::vector<Eigen::MatrixXd> next(static_cast<std::size_t>(s.wr), Eigen::MatrixXd::Zero(n, n));
    for (int a = 0; a < s.wl; ++a) {
      const auto& left = acc[static_cast<std::size_t>(a)];
      if (left.isZero(0.0)) continue;
      for (int b = 0; b < s.wr; ++b) {
        const MpoOp& op = s.at(a, b);
        if (op.kind == OpKind::Zero) continue;
        const Eigen::MatrixXd w = op.dense(mpo.d);
        auto& out = next[static_cast<std::size_t>(b)];
        for (Eigen::Index i = 0; i < left.rows(); ++i)
          for (Eigen::Index k = 0; k < left.cols(); ++k)
            if (left(i, k) != 0.0) out.block(i * mpo.d, k * mpo.d, mpo.d, mpo.d) += left(i, k) * w;
      }
    }
    acc = std::move(next);
  }
  return acc[static_cast<std::size_t>(mpo.right_channel)];
}

}  // namespace iccwork
