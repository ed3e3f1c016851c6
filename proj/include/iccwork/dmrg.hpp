#pragma once

// Two-site DMRG for the open anharmonic chain in a truncated oscillator basis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "iccwork/errors.hpp"
#include "iccwork/harmonic.hpp"
#include "iccwork/lanczos.hpp"
#include "iccwork/local_basis.hpp"
#include "iccwork/model.hpp"
#include "iccwork/mpo.hpp"
#include "iccwork/mps.hpp"

namespace iccwork {

struct DmrgOptions {
  int chi_max = 32;
  double energy_tol = 1e-10;     ///< |E(sweep) - E(previous sweep)|
  double variance_bound = 1e-8;  ///< required <H^2> - <H>^2 at convergence
  double sv_cutoff = 1e-10;      ///< singular values below sv_cutoff * s_max are dropped
  int min_sweeps = 2;
  int max_sweeps = 40;
  double pinning = 0.0;          ///< staggered field eps (-1)^j y_j
  std::uint64_t seed = 20240611;
  LanczosOptions lanczos{};
};

struct GroundStateResult {
  double energy = 0.0;
  double y_sq_total = 0.0;
  std::vector<double> y_mean;
  std::vector<double> y_sq;
  int bond_dimension = 0;
  double energy_variance = 0.0;
  int sweeps = 0;
  double truncation_weight = 0.0;  ///< largest discarded weight in the last sweep
  double last_energy_change = 0.0;
  long matvecs = 0;  ///< effective-Hamiltonian applications, all sweeps
  bool converged = false;
  LocalBasisSpec basis;
};

struct GroundStateRun {
  GroundStateResult result;
  Mps state;
};

namespace detail {

// Effective two-site Hamiltonian on theta with layout l + chl (r + chr (s2 + d s1)).
class TwoSiteOperator {
 public:
  TwoSiteOperator(const Environment& left, const Environment& right, const MpoSite& w1, const MpoSite& w2,
                  Eigen::Index chl, Eigen::Index chr, int d)
      : left_(left), right_(right), w1_(w1), w2_(w2), chl_(chl), chr_(chr), d_(d) {}

  Eigen::Index size() const { return chl_ * chr_ * d_ * d_; }

  /// Diagonal of the effective Hamiltonian.
  Eigen::VectorXd diagonal() const {
    const Eigen::Index n = chl_ * chr_;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
    for (int a = 0; a < w1_.wl; ++a) {
      const EnvBlock& le = left_[static_cast<std::size_t>(a)];
      if (le.kind == OpKind::Zero) continue;
      const Eigen::VectorXd dl = le.kind == OpKind::Identity ? Eigen::VectorXd::Ones(chl_) : Eigen::VectorXd(le.m.diagonal());
      for (int c = 0; c < w2_.wr; ++c) {
        const EnvBlock& re = right_[static_cast<std::size_t>(c)];
        if (re.kind == OpKind::Zero) continue;
        const Eigen::VectorXd dr = re.kind == OpKind::Identity ? Eigen::VectorXd::Ones(chr_) : Eigen::VectorXd(re.m.diagonal());
        const Eigen::MatrixXd lr = dl * dr.transpose();
        for (int b = 0; b < w1_.wr; ++b) {
          const MpoOp& o1 = w1_.at(a, b);
          const MpoOp& o2 = w2_.at(b, c);
          if (o1.kind == OpKind::Zero || o2.kind == OpKind::Zero) continue;
          for (int s1 = 0; s1 < d_; ++s1) {
            const double x1 = o1.kind == OpKind::Identity ? 1.0 : o1.m(s1, s1);
            if (x1 == 0.0) continue;
            for (int s2 = 0; s2 < d_; ++s2) {
              const double x2 = o2.kind == OpKind::Identity ? 1.0 : o2.m(s2, s2);
              if (x2 == 0.0) continue;
              Eigen::Map<Eigen::MatrixXd> blk(out.data() + (s1 * d_ + s2) * n, chl_, chr_);
              blk += (x1 * x2) * lr;
            }
          }
        }
      }
    }
    return out;
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
    const Eigen::Index n = chl_ * chr_;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    Eigen::VectorXd z(v.size()), t(v.size()), u(v.size());
    for (int a = 0; a < w1_.wl; ++a) {
      const EnvBlock& le = left_[static_cast<std::size_t>(a)];
      if (le.kind == OpKind::Zero) continue;
      for (int c = 0; c < w2_.wr; ++c) {
        const EnvBlock& re = right_[static_cast<std::size_t>(c)];
        if (re.kind == OpKind::Zero) continue;
        bool any = false;
        z.setZero();
        for (int b = 0; b < w1_.wr; ++b) {
          const MpoOp& o1 = w1_.at(a, b);
          const MpoOp& o2 = w2_.at(b, c);
          if (o1.kind == OpKind::Zero || o2.kind == OpKind::Zero) continue;
          any = true;
          const Eigen::VectorXd* cur = &v;
          if (o2.kind == OpKind::General) {
            for (int s1 = 0; s1 < d_; ++s1) {
              const Eigen::Index off = s1 * n * d_;
              Eigen::Map<const Eigen::MatrixXd> in(cur->data() + off, n, d_);
              Eigen::Map<Eigen::MatrixXd> dst(t.data() + off, n, d_);
              dst.noalias() = in * o2.m.transpose();
            }
            cur = &t;
          }
          if (o1.kind == OpKind::General) {
            Eigen::Map<const Eigen::MatrixXd> in(cur->data(), n * d_, d_);
            Eigen::Map<Eigen::MatrixXd> dst(u.data(), n * d_, d_);
            dst.noalias() = in * o1.m.transpose();
            cur = &u;
          }
          z += *cur;
        }
        if (!any) continue;
        if (le.kind == OpKind::General) {
          Eigen::Map<Eigen::MatrixXd> zm(z.data(), chl_, chr_ * d_ * d_);
          Eigen::Map<Eigen::MatrixXd> tm(t.data(), chl_, chr_ * d_ * d_);
          tm.noalias() = le.m * zm;
          z = t;
        }
        if (re.kind == OpKind::General) {
          for (int blk = 0; blk < d_ * d_; ++blk) {
            Eigen::Map<Eigen::MatrixXd> zb(z.data() + blk * n, chl_, chr_);
            Eigen::Map<Eigen::MatrixXd> tb(t.data() + blk * n, chl_, chr_);
            tb.noalias() = zb * re.m.transpose();
          }
          z = t;
        }
        out += z;
      }
    }
    return out;
  }

 private:
  const Environment& left_;
  const Environment& right_;
  const MpoSite& w1_;
  const MpoSite& w2_;
  Eigen::Index chl_, chr_;
  int d_;
};

inline Eigen::VectorXd merge_two_sites(const MpsTensor& a, const MpsTensor& b) {
  const int d = a.d();
  const Eigen::Index chl = a.dl(), chr = b.dr(), n = chl * chr;
  Eigen::VectorXd theta(n * d * d);
  for (int s1 = 0; s1 < d; ++s1)
    for (int s2 = 0; s2 < d; ++s2) {
      Eigen::Map<Eigen::MatrixXd> blk(theta.data() + (s1 * d + s2) * n, chl, chr);
      blk.noalias() = a.blocks[static_cast<std::size_t>(s1)] * b.blocks[static_cast<std::size_t>(s2)];
    }
  return theta;
}

struct SplitResult {
  MpsTensor left;
  MpsTensor right;
  double discarded = 0.0;
};

// SVD split; the singular values go to the right tensor when moving right, to the left otherwise.
inline SplitResult split_two_sites(const Eigen::VectorXd& theta, Eigen::Index chl, Eigen::Index chr, int d,
                                   int chi_max, double sv_cutoff, bool move_right) {
  const Eigen::Index n = chl * chr;
  Eigen::MatrixXd m(d * chl, d * chr);
  for (int s1 = 0; s1 < d; ++s1)
    for (int s2 = 0; s2 < d; ++s2)
      m.block(s1 * chl, s2 * chr, chl, chr) =
          Eigen::Map<const Eigen::MatrixXd>(theta.data() + (s1 * d + s2) * n, chl, chr);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double total = sv.squaredNorm();
  require(total > 0.0 && std::isfinite(total), ErrorKind::LocalSolverFailure, "degenerate two-site state");
  Eigen::Index keep = 1;
  while (keep < sv.size() && keep < chi_max && sv(keep) > sv_cutoff * sv(0)) ++keep;
  SplitResult out;
  out.discarded = std::max(0.0, 1.0 - sv.head(keep).squaredNorm() / total);
  const Eigen::VectorXd s = sv.head(keep) / sv.head(keep).norm();
  Eigen::MatrixXd u = svd.matrixU().leftCols(keep);
  Eigen::MatrixXd vt = svd.matrixV().leftCols(keep).transpose();
  if (move_right) vt = s.asDiagonal() * vt;
  else u = u * s.asDiagonal();
  out.left = MpsTensor::from_rows(u, d);
  out.right = MpsTensor::from_cols(vt, d);
  return out;
}

inline void site_profiles(const Mps& mps, const LocalOperators& ops, GroundStateResult& r) {
  // centre at site 0, sites 1.. right-canonical
  Eigen::MatrixXd env = Eigen::MatrixXd::Ones(1, 1);
  r.y_mean.clear();
  r.y_sq.clear();
  const int d = mps.local_dim();
  for (const auto& t : mps.sites) {
    std::vector<Eigen::MatrixXd> la;
    for (const auto& a : t.blocks) la.push_back(env * a);
    double ym = 0.0, y2 = 0.0;
    for (int sp = 0; sp < d; ++sp)
      for (int s = 0; s < d; ++s) {
        const double yv = ops.y(sp, s), y2v = ops.y2(sp, s);
        if (yv == 0.0 && y2v == 0.0) continue;
        const double ov = (t.blocks[static_cast<std::size_t>(sp)].array() * la[static_cast<std::size_t>(s)].array()).sum();
        ym += yv * ov;
        y2 += y2v * ov;
      }
    r.y_mean.push_back(ym);
    r.y_sq.push_back(y2);
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(t.dr(), t.dr());
    for (int s = 0; s < d; ++s) next.noalias() += t.blocks[static_cast<std::size_t>(s)].transpose() * la[static_cast<std::size_t>(s)];
    env = std::move(next);
  }
  r.y_sq_total = pairwise_sum(r.y_sq);
}

}  // namespace detail

/// <(H - E)^2> with E = <H>, for a normalized MPS.
inline double energy_variance(const Mps& mps, const ModelParams& p, double pinning, double energy) {
  const auto shifted = build_mpo(p, mps.basis, pinning, -energy / p.L);
  return std::max(0.0, expectation(mps, square(shifted.mpo)));
}

/// Ground state by two-site sweeps. `warm` (same basis and L) replaces the seeded product start.
inline GroundStateRun ground_state(const ModelParams& p, const LocalBasisSpec& basis, const DmrgOptions& opt,
                                   const Mps* warm = nullptr) {
  require(opt.chi_max >= 2, ErrorKind::InvalidArgument, "chi_max must be >= 2");
  require(opt.energy_tol > 0.0, ErrorKind::InvalidArgument, "energy_tol must be > 0");
  const auto H = build_mpo(p, basis, opt.pinning);
  const int L = p.L;
  const int d = basis.dim();
  Mps mps;
  if (warm != nullptr) {
    require(warm->basis == basis, ErrorKind::BasisMismatch, "warm-start state uses a different local basis");
    require(warm->length() == L, ErrorKind::InvalidArgument, "warm-start state has a different length");
    mps = *warm;
  } else {
    mps = product_state(L, basis, opt.seed);
  }
  right_canonicalize(mps);
  {
    const double nrm = std::sqrt(norm_squared(mps));
    for (auto& b : mps.sites.front().blocks) b /= nrm;
  }

  const auto& W = H.mpo.sites;
  std::vector<Environment> left(static_cast<std::size_t>(L)), right(static_cast<std::size_t>(L));
  left[0] = boundary_environment(W.front().wl, H.mpo.left_channel);
  right[static_cast<std::size_t>(L - 1)] = boundary_environment(W.back().wr, H.mpo.right_channel);
  for (int j = L - 2; j >= 0; --j)
    right[static_cast<std::size_t>(j)] = extend_right(right[static_cast<std::size_t>(j + 1)],
                                                      mps.sites[static_cast<std::size_t>(j + 1)],
                                                      W[static_cast<std::size_t>(j + 1)], true);

  GroundStateRun run;
  auto& res = run.result;
  res.basis = basis;
  double energy = std::numeric_limits<double>::quiet_NaN();
  // a warm start is judged against its own energy, so it may converge after one sweep
  double prev = warm != nullptr ? expectation(mps, H.mpo) : std::numeric_limits<double>::quiet_NaN();

  auto optimize = [&](int j, bool move_right) {
    auto& a = mps.sites[static_cast<std::size_t>(j)];
    auto& b = mps.sites[static_cast<std::size_t>(j + 1)];
    const Eigen::Index chl = a.dl(), chr = b.dr();
    detail::TwoSiteOperator op(left[static_cast<std::size_t>(j)], right[static_cast<std::size_t>(j + 1)],
                               W[static_cast<std::size_t>(j)], W[static_cast<std::size_t>(j + 1)], chl, chr, d);
    const auto eig = davidson_lowest(op, op.diagonal(), detail::merge_two_sites(a, b), opt.lanczos);
    energy = eig.value;
    res.matvecs += eig.matvecs;
    auto split = detail::split_two_sites(eig.vector, chl, chr, d, opt.chi_max, opt.sv_cutoff, move_right);
    res.truncation_weight = std::max(res.truncation_weight, split.discarded);
    a = std::move(split.left);
    b = std::move(split.right);
  };

  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    res.truncation_weight = 0.0;
    for (int j = 0; j + 1 < L; ++j) {
      optimize(j, true);
      left[static_cast<std::size_t>(j + 1)] = extend_left(left[static_cast<std::size_t>(j)],
                                                          mps.sites[static_cast<std::size_t>(j)],
                                                          W[static_cast<std::size_t>(j)], true);
    }
    for (int j = L - 2; j >= 0; --j) {
      optimize(j, false);
      right[static_cast<std::size_t>(j)] = extend_right(right[static_cast<std::size_t>(j + 1)],
                                                        mps.sites[static_cast<std::size_t>(j + 1)],
                                                        W[static_cast<std::size_t>(j + 1)], true);
    }
    res.sweeps = sweep;
    res.last_energy_change = std::isnan(prev) ? kInfinity : std::abs(energy - prev);
    prev = energy;
    if (sweep < opt.min_sweeps || res.last_energy_change >= opt.energy_tol) continue;
    const double e = expectation(mps, H.mpo);
    res.energy_variance = energy_variance(mps, p, opt.pinning, e);
    if (res.energy_variance <= opt.variance_bound) {
      res.converged = true;
      break;
    }
  }
  res.energy = expectation(mps, H.mpo);
  if (!res.converged) res.energy_variance = energy_variance(mps, p, opt.pinning, res.energy);
  res.bond_dimension = static_cast<int>(mps.max_bond());
  detail::site_profiles(mps, local_operators(p.g, basis), res);
  run.state = std::move(mps);
  return run;
}

/// Convenience overload with default solver options.
inline GroundStateRun ground_state(const ModelParams& p, const LocalBasisSpec& basis, int chi_max, double tol) {
  DmrgOptions opt;
  opt.chi_max = chi_max;
  opt.energy_tol = tol;
  return ground_state(p, basis, opt);
}

/// <W> = 1/2 (w_f^2 - w_i^2) Y^2(w_i) for a sudden quench from the ground state at w_i^2.
inline double average_work_from_ground(const GroundStateResult& gs, const QuenchSpec& q) {
  return 0.5 * q.signed_delta() * gs.y_sq_total;
}

struct ZeroTemperatureWork {
  WorkStatistics stats;  ///< variance left empty
  GroundStateResult initial;
  GroundStateResult final_;
  double error_bound = 0.0;  ///< numerical uncertainty of irreversible_work
};

inline double energy_error_bound(const GroundStateResult& r, const DmrgOptions& opt) {
  return std::max(r.last_energy_change, opt.energy_tol) + std::abs(r.energy) * r.truncation_weight;
}

/// W_IRR = <W> - [E_G(w_f) - E_G(w_i)] at T = 0.
inline ZeroTemperatureWork irreversible_work_t0(const ModelParams& p, const QuenchSpec& q,
                                                const LocalBasisSpec& basis, const DmrgOptions& opt,
                                                const Mps* warm = nullptr) {
  ZeroTemperatureWork out;
  auto gi = ground_state(p.with_omega_sq(q.omega_sq_initial()), basis, opt, warm);
  require(gi.result.converged, ErrorKind::NoConvergence, "initial ground state did not converge");
  if (q.identity()) {
    out.initial = out.final_ = gi.result;
    out.stats.variance.reset();
    return out;
  }
  auto gf = ground_state(p.with_omega_sq(q.omega_sq_final()), basis, opt, &gi.state);
  require(gf.result.converged, ErrorKind::NoConvergence, "final ground state did not converge");
  out.stats.mean_work = average_work_from_ground(gi.result, q);
  out.stats.free_energy_difference = gf.result.energy - gi.result.energy;
  out.stats.irreversible_work = out.stats.mean_work - out.stats.free_energy_difference;
  out.stats.variance.reset();
  out.error_bound = energy_error_bound(gi.result, opt) + energy_error_bound(gf.result, opt);
  out.initial = std::move(gi.result);
  out.final_ = std::move(gf.result);
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps over control-parameter grids

struct GroundSweepRow {
  ModelParams params;
  std::optional<GroundStateResult> result;
  std::string error;  ///< set when the point failed
};

struct GroundSweepTable {
  std::vector<GroundSweepRow> rows;
  int total_sweeps() const {
    int n = 0;
    for (const auto& r : rows)
      if (r.result) n += r.result->sweeps;
    return n;
  }
};

struct SweepOptions {
  DmrgOptions dmrg{};
  bool warm_start = true;
  /// One local basis for the whole sweep so that states can be reused.
  std::optional<LocalBasisSpec> basis;
  int local_dim = 12;
};

/// Basis used for a grid: the default basis at the smallest w^2 of the grid.
inline LocalBasisSpec sweep_basis(const std::vector<ModelParams>& grid, int local_dim) {
  require(!grid.empty(), ErrorKind::InvalidArgument, "empty parameter grid");
  const auto lowest = std::min_element(grid.begin(), grid.end(), [](const ModelParams& a, const ModelParams& b) {
    return a.omega_sq < b.omega_sq;
  });
  return default_basis(*lowest, local_dim);
}

/// Ground states along a grid in the given order. Consecutive points with equal L are
/// warm-started from each other. Failures are recorded per row and the sweep continues.
inline GroundSweepTable sweep_ground_observables(const std::vector<ModelParams>& grid, const SweepOptions& opt,
                                                 const std::function<void(std::size_t, const GroundSweepRow&,
                                                                          const Mps*)>& on_row = {}) {
  require(!grid.empty(), ErrorKind::InvalidArgument, "empty parameter grid");
  const LocalBasisSpec basis = opt.basis ? *opt.basis : sweep_basis(grid, opt.local_dim);
  GroundSweepTable table;
  std::optional<Mps> previous;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GroundSweepRow row;
    row.params = grid[i];
    const Mps* warm = nullptr;
    if (opt.warm_start && previous && previous->length() == grid[i].L) warm = &*previous;
    try {
      auto run = ground_state(grid[i], basis, opt.dmrg, warm);
      row.result = std::move(run.result);
      if (!row.result->converged) row.error = "NoConvergence";
      previous = std::move(run.state);
    } catch (const Error& e) {
      row.error = std::string(to_string(e.kind())) + ": " + e.what();
      previous.reset();
    }
    if (on_row) on_row(i, row, previous ? &*previous : nullptr);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace iccwork
