#pragma once

// Harmonic (normal-mode) theory of sudden transverse-frequency quenches.
//
// Each normal mode is an oscillator whose frequency jumps w_i -> w_f. Work
// statistics, characteristic functions and full work distributions factorize
// over modes; the per-mode kernels are exposed so that they can be checked in
// isolation against brute-force two-point-measurement oracles.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "iccwork/errors.hpp"
#include "iccwork/model.hpp"
#include "iccwork/numeric.hpp"

namespace iccwork {

// ---------------------------------------------------------------------------
// Dispersions

struct DispersionTable {
  std::vector<double> momenta;      ///< k_n = 2 pi n / L - pi
  std::vector<double> frequencies;  ///< w_k >= 0, same order as momenta
  Phase phase = Phase::Linear;
};

namespace detail {

inline void require_periodic_grid(const ModelParams& p) {
  p.validate();
  require(p.L >= 2 && p.L % 2 == 0, ErrorKind::InvalidArgument,
          "periodic momentum grid needs an even L >= 2 (got L = " + std::to_string(p.L) + ")");
}

// cos^2(k_n / 2) = sin^2(pi n / L); exact zero at the soft mode n = 0.
inline double cos_sq_half(int n, int L) {
  const double s = std::sin(std::numbers::pi * n / L);
  return s * s;
}

inline DispersionTable build_dispersion(const ModelParams& p, double onsite, Phase phase) {
  DispersionTable table;
  table.phase = phase;
  table.momenta.reserve(static_cast<std::size_t>(p.L));
  table.frequencies.reserve(static_cast<std::size_t>(p.L));
  for (int n = 0; n < p.L; ++n) {
    const double arg = onsite + 4.0 * p.constants.h2 * cos_sq_half(n, p.L);
    require(arg >= 0.0, ErrorKind::ImaginaryFrequency,
            "negative squared frequency at momentum index " + std::to_string(n));
    table.momenta.push_back(2.0 * std::numbers::pi * n / p.L - std::numbers::pi);
    table.frequencies.push_back(p.g * std::sqrt(arg));
  }
  return table;
}

}  // namespace detail

/// w_k = g sqrt(w^2 - h1 + 4 h2 cos^2(k/2)) on the periodic grid.
inline DispersionTable linear_dispersion(const ModelParams& p) {
  detail::require_periodic_grid(p);
  return detail::build_dispersion(p, p.omega_sq - p.constants.h1,
                                  classify_phase(p) == Phase::Critical ? Phase::Critical
                                                                       : Phase::Linear);
}

/// Small oscillations around y_j = (-1)^j b/2: the on-site curvature becomes 2 (h1 - w^2).
inline DispersionTable zigzag_dispersion(const ModelParams& p) {
  detail::require_periodic_grid(p);
  return detail::build_dispersion(p, 2.0 * (p.constants.h1 - p.omega_sq),
                                  classify_phase(p) == Phase::Critical ? Phase::Critical
                                                                       : Phase::Zigzag);
}

inline DispersionTable dispersion(const ModelParams& p) {
  return p.omega_sq >= p.constants.h1 ? linear_dispersion(p) : zigzag_dispersion(p);
}

/// Normal-mode frequencies for either boundary. Periodic: momentum order.
/// Open: ascending, from the tridiagonal force-constant matrix.
inline std::vector<double> mode_frequencies(const ModelParams& p) {
  if (p.boundary == Boundary::periodic) return dispersion(p).frequencies;
  p.validate();
  const auto& c = p.constants;
  const double onsite = p.omega_sq >= c.h1 ? p.omega_sq - c.h1 : 2.0 * (c.h1 - p.omega_sq);
  if (p.L == 1) {
    require(onsite >= 0.0, ErrorKind::ImaginaryFrequency, "negative squared frequency");
    return {p.g * std::sqrt(onsite)};
  }
  Eigen::VectorXd diag(p.L);
  Eigen::VectorXd off = Eigen::VectorXd::Constant(p.L - 1, c.h2);
  for (int j = 0; j < p.L; ++j) {
    const int bonds = (j == 0 || j == p.L - 1) ? 1 : 2;
    diag(j) = onsite + bonds * c.h2;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(p.L));
  for (int i = 0; i < p.L; ++i) {
    double ev = solver.eigenvalues()(i);
    if (ev < 0.0 && ev > -1e-13) ev = 0.0;  // round-off at the soft mode
    require(ev >= 0.0, ErrorKind::ImaginaryFrequency, "negative open-chain eigenvalue");
    out.push_back(p.g * std::sqrt(ev));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Work statistics

struct WorkStatistics {
  double mean_work = 0.0;
  double free_energy_difference = 0.0;
  double irreversible_work = 0.0;
  std::optional<double> variance;  ///< absent when the engine cannot provide it
};

/// Single oscillator, thermal at beta, frequency w_i -> w_f suddenly.
inline WorkStatistics mode_work_statistics(double wi, double wf, double beta) {
  require(wi > 0.0, ErrorKind::SoftModeSingular, "initial mode frequency is zero");
  require(wf >= 0.0, ErrorKind::InvalidArgument, "final mode frequency must be >= 0");
  require(beta > 0.0, ErrorKind::InvalidArgument, "beta must be > 0");
  WorkStatistics s;
  if (wi == wf) {
    s.variance = 0.0;
    return s;
  }
  const double dsq = wf * wf - wi * wi;
  if (std::isinf(beta)) {
    s.mean_work = dsq / (4.0 * wi);
    s.free_energy_difference = 0.5 * (wf - wi);
    s.irreversible_work = (wf - wi) * (wf - wi) / (4.0 * wi);
    s.variance = dsq * dsq / (8.0 * wi * wi);
    return s;
  }
  require(wf > 0.0, ErrorKind::SoftModeSingular, "final mode frequency is zero at finite beta");
  const double coth_i = 1.0 / std::tanh(0.5 * beta * wi);
  s.mean_work = dsq / (4.0 * wi) * coth_i;
  s.free_energy_difference = (log_sinh(0.5 * beta * wf) - log_sinh(0.5 * beta * wi)) / beta;
  s.irreversible_work = s.mean_work - s.free_energy_difference;
  // <W^2> - <W>^2 = (dlambda/2)^2 (<y^4> - <y^2>^2) for the Gaussian thermal state
  s.variance = dsq * dsq * coth_i * coth_i / (8.0 * wi * wi);
  return s;
}

namespace detail {

struct ModePairs {
  std::vector<double> initial;
  std::vector<double> final;
};

inline ModePairs quench_modes(const ModelParams& p, const QuenchSpec& q) {
  p.validate();
  require(q.same_phase(p.constants), ErrorKind::PhaseMismatch,
          "quench crosses the harmonic critical point h1");
  return {mode_frequencies(p.with_omega_sq(q.omega_sq_initial())),
          mode_frequencies(p.with_omega_sq(q.omega_sq_final()))};
}

}  // namespace detail

/// Mode-summed work statistics; the model's omega_sq is taken from the quench.
inline WorkStatistics quench_work_statistics(const ModelParams& p, const QuenchSpec& q) {
  const auto modes = detail::quench_modes(p, q);
  WorkStatistics total;
  total.variance = 0.0;
  if (q.identity()) return total;
  const std::size_t n = modes.initial.size();
  std::vector<double> mean(n), df(n), wirr(n), var(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto s = mode_work_statistics(modes.initial[k], modes.final[k], p.beta);
    mean[k] = s.mean_work;
    df[k] = s.free_energy_difference;
    wirr[k] = s.irreversible_work;
    var[k] = *s.variance;
  }
  total.mean_work = pairwise_sum(mean);
  total.irreversible_work = pairwise_sum(wirr);
  total.free_energy_difference = total.mean_work - total.irreversible_work;
  total.variance = pairwise_sum(var);
  return total;
}

// ---------------------------------------------------------------------------
// Characteristic function chi(t) = <exp(i W t)>

namespace detail {

// chi(t) = (1 - x) e^{i t (wf - wi)/2} / sqrt(B(t)) with x = e^{-beta wi},
// B = c - s u^2 - s v^2 + c u^2 v^2 - 2 u v, u = e^{i t wf}, v = x e^{-i t wi},
// c = (Omega + 1)/2, s = (Omega - 1)/2. The square-root branch is followed
// continuously from B(0) = (1 - x)^2 > 0 using |B| >= (1 - x)^2.
class ModeCharacteristic {
 public:
  ModeCharacteristic(double wi, double wf, double beta) : wi_(wi), wf_(wf) {
    const double omega = (wi * wi + wf * wf) / (2.0 * wi * wf);
    c_ = 0.5 * (omega + 1.0);
    s_ = 0.5 * (omega - 1.0);
    x_ = std::isinf(beta) ? 0.0 : std::exp(-beta * wi);
    const double dw = std::abs(wf - wi);
    const double rate = 2.0 * s_ * wf + 2.0 * s_ * wi * x_ * x_ + 2.0 * c_ * dw * x_ * x_ +
                        2.0 * dw * x_;
    const double floor = (1.0 - x_) * (1.0 - x_);
    max_step_ = rate > 0.0 ? 0.5 * floor / rate : kInfinity;
  }

  std::complex<double> bracket(double t) const {
    using namespace std::complex_literals;
    const std::complex<double> u = std::exp(1i * (t * wf_));
    const std::complex<double> v = x_ * std::exp(-1i * (t * wi_));
    return c_ - s_ * u * u - s_ * v * v + c_ * u * u * v * v - 2.0 * u * v;
  }

  /// Values at ascending non-negative times.
  std::vector<std::complex<double>> evaluate_sorted(std::span<const double> times) const {
    using namespace std::complex_literals;
    std::vector<std::complex<double>> out;
    out.reserve(times.size());
    double t = 0.0;
    std::complex<double> b = bracket(0.0);
    std::complex<double> log_b = std::log(b);
    for (double target : times) {
      while (t < target) {
        const double next = std::min(target, t + max_step_);
        const std::complex<double> b_next = bracket(next);
        log_b += std::log(b_next / b);
        b = b_next;
        t = next;
      }
      out.push_back((1.0 - x_) * std::exp(1i * (0.5 * target * (wf_ - wi_)) - 0.5 * log_b));
    }
    return out;
  }

 private:
  double wi_, wf_;
  double c_ = 1.0, s_ = 0.0, x_ = 0.0;
  double max_step_ = kInfinity;
};

}  // namespace detail

inline std::vector<std::complex<double>> mode_characteristic_function(double wi, double wf,
                                                                      double beta,
                                                                      std::span<const double> t_grid) {
  require(wi > 0.0, ErrorKind::SoftModeSingular, "initial mode frequency is zero");
  require(wf > 0.0, ErrorKind::SoftModeSingular, "final mode frequency is zero");
  std::vector<std::complex<double>> out(t_grid.size(), {1.0, 0.0});
  if (wi == wf) return out;
  std::vector<std::size_t> order(t_grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(t_grid[a]) < std::abs(t_grid[b]);
  });
  std::vector<double> sorted_abs(t_grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted_abs[i] = std::abs(t_grid[order[i]]);
  const auto values = detail::ModeCharacteristic(wi, wf, beta).evaluate_sorted(sorted_abs);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double t = t_grid[order[i]];
    out[order[i]] = t < 0.0 ? std::conj(values[i]) : values[i];
  }
  return out;
}

inline std::vector<std::complex<double>> characteristic_function(const ModelParams& p,
                                                                 const QuenchSpec& q,
                                                                 std::span<const double> t_grid) {
  const auto modes = detail::quench_modes(p, q);
  std::vector<std::complex<double>> chi(t_grid.size(), {1.0, 0.0});
  if (q.identity()) return chi;
  for (std::size_t k = 0; k < modes.initial.size(); ++k) {
    const auto factor = mode_characteristic_function(modes.initial[k], modes.final[k], p.beta, t_grid);
    for (std::size_t i = 0; i < chi.size(); ++i) chi[i] *= factor[i];
  }
  return chi;
}

// ---------------------------------------------------------------------------
// Work distributions

struct WorkDistribution {
  std::vector<double> support;  ///< ascending work values
  std::vector<double> weights;
  double truncation_error = 0.0;  ///< discarded probability
  /// Bound on the relative deficit of <exp(-beta W)> against Z_f / Z_i caused by
  /// truncation; zero at beta = infinity where the identity is not defined.
  double tilted_truncation_error = 0.0;

  double total_weight() const { return pairwise_sum(weights); }

  double moment(int order) const {
    std::vector<double> terms(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
      terms[i] = weights[i] * std::pow(support[i], order);
    return pairwise_sum(terms);
  }

  double mean() const { return moment(1); }
  double variance() const {
    const double m = mean();
    std::vector<double> terms(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
      terms[i] = weights[i] * (support[i] - m) * (support[i] - m);
    return pairwise_sum(terms);
  }

  double exponential_average(double beta) const {
    std::vector<double> terms(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
      terms[i] = weights[i] > 0.0 ? std::exp(std::log(weights[i]) - beta * support[i]) : 0.0;
    return pairwise_sum(terms);
  }

  /// Weight at a support point (0 if absent), matched to relative tolerance.
  double weight_at(double work, double rel_tol = 1e-12) const {
    const auto it = std::lower_bound(support.begin(), support.end(),
                                     work - rel_tol * std::max(1.0, std::abs(work)));
    if (it != support.end() && std::abs(*it - work) <= rel_tol * std::max(1.0, std::abs(work)))
      return weights[static_cast<std::size_t>(it - support.begin())];
    return 0.0;
  }
};

struct DistributionOptions {
  double prune_threshold = 1e-15;
  std::size_t max_support = 4'000'000;
  int max_levels = 20000;
};

/// Overlaps <m_f | n_i> between oscillator eigenstates of frequencies w_f and w_i
/// (same centre), for m <= max_m and n <= max_n. Rows are m, columns n.
inline Eigen::MatrixXd squeezing_overlaps(double wi, double wf, int max_m, int max_n) {
  require(wi > 0.0 && wf > 0.0, ErrorKind::InvalidArgument, "frequencies must be > 0");
  // a_i = mu a_f + nu a_f^dagger
  const double rho = std::sqrt(wi / wf);
  const double mu = 0.5 * (rho + 1.0 / rho);
  const double nu = 0.5 * (rho - 1.0 / rho);
  Eigen::MatrixXd I = Eigen::MatrixXd::Zero(max_m + 1, max_n + 1);
  I(0, 0) = 1.0 / std::sqrt(mu);
  for (int n = 1; n < max_n; n += 2) {
    I(0, n + 1) = nu * std::sqrt(static_cast<double>(n)) * I(0, n - 1) /
                  (mu * std::sqrt(n + 1.0));
  }
  for (int m = 0; m < max_m; ++m) {
    for (int n = 0; n <= max_n; ++n) {
      double acc = 0.0;
      if (n > 0) acc += std::sqrt(static_cast<double>(n)) * I(m, n - 1);
      if (m > 0) acc -= nu * std::sqrt(static_cast<double>(m)) * I(m - 1, n);
      I(m + 1, n) = acc / (mu * std::sqrt(m + 1.0));
    }
  }
  return I;
}

namespace detail {

struct Atom {
  double work;
  double weight;  ///< forward probability
  double tilted;  ///< weight * exp(-beta W) * Z_i / Z_f (backward probability of -W)
};

struct AtomSet {
  std::vector<Atom> atoms;
  double forward_missing = 0.0;
  double tilted_missing = 0.0;
};

inline bool same_work(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// Sort, merge coincident work values, prune atoms below threshold in both weights.
inline void merge_and_prune(AtomSet& set, double prune) {
  auto& a = set.atoms;
  std::sort(a.begin(), a.end(), [](const Atom& l, const Atom& r) { return l.work < r.work; });
  std::vector<Atom> merged;
  merged.reserve(a.size());
  for (const Atom& atom : a) {
    if (!merged.empty() && same_work(merged.back().work, atom.work)) {
      merged.back().weight += atom.weight;
      merged.back().tilted += atom.tilted;
    } else {
      merged.push_back(atom);
    }
  }
  std::vector<Atom> kept;
  kept.reserve(merged.size());
  for (const Atom& atom : merged) {
    if (atom.weight < prune && atom.tilted < prune) {
      set.forward_missing += atom.weight;
      set.tilted_missing += atom.tilted;
    } else {
      kept.push_back(atom);
    }
  }
  a = std::move(kept);
}

inline AtomSet mode_atoms(double wi, double wf, double beta, double cutoff,
                          const DistributionOptions& opt) {
  require(wi > 0.0 && wf > 0.0, ErrorKind::SoftModeSingular, "mode frequency is zero");
  require(cutoff > 0.0 && cutoff < 1.0, ErrorKind::InvalidArgument, "weight_cutoff must lie in (0, 1)");
  AtomSet set;
  if (wi == wf) {
    set.atoms.push_back({0.0, 1.0, 1.0});
    return set;
  }
  const bool zero_t = std::isinf(beta);
  const double xi = zero_t ? 0.0 : std::exp(-beta * wi);
  const double xf = zero_t ? 0.0 : std::exp(-beta * wf);
  auto tail_levels = [&](double x) {
    if (x <= 0.0) return 0;
    // smallest N with x^{N+1} <= cutoff / 4
    return std::max(0, static_cast<int>(std::ceil(std::log(cutoff / 4.0) / std::log(x))) - 1);
  };
  int n_max = tail_levels(xi);
  int m_max = std::max(tail_levels(xf), n_max) + 8;
  auto p_init = [&](int n) { return (1.0 - xi) * std::pow(xi, n); };
  auto p_final = [&](int m) { return (1.0 - xf) * std::pow(xf, m); };

  Eigen::MatrixXd I;
  for (;;) {
    require(n_max <= opt.max_levels && m_max <= opt.max_levels, ErrorKind::CutoffTooLoose,
            "per-mode level truncation exceeds max_levels");
    I = squeezing_overlaps(wi, wf, m_max, n_max);
    double forward = zero_t ? 0.0 : std::pow(xi, n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
      const double col = I.col(n).squaredNorm();
      forward += p_init(n) * std::max(0.0, 1.0 - col);
    }
    double tilted = 0.0;
    if (!zero_t) {
      tilted = std::pow(xf, m_max + 1);
      for (int m = 0; m <= m_max; ++m) {
        const double row = I.row(m).squaredNorm();
        tilted += p_final(m) * std::max(0.0, 1.0 - row);
      }
    }
    const bool grow_m = forward > cutoff;
    const bool grow_n = tilted > cutoff;
    if (!grow_m && !grow_n) {
      set.forward_missing = forward;
      set.tilted_missing = tilted;
      break;
    }
    if (grow_m) m_max += std::max(4, m_max / 4);
    if (grow_n) n_max += std::max(4, n_max / 4);
  }

  const double e0i = 0.5 * wi, e0f = 0.5 * wf;
  for (int n = 0; n <= n_max; ++n) {
    for (int m = n % 2; m <= m_max; m += 2) {
      const double amp2 = I(m, n) * I(m, n);
      if (amp2 == 0.0) continue;
      const double w = (wf * m + e0f) - (wi * n + e0i);
      set.atoms.push_back({w, p_init(n) * amp2, zero_t ? 0.0 : p_final(m) * amp2});
    }
  }
  merge_and_prune(set, opt.prune_threshold);
  return set;
}

inline AtomSet convolve(const AtomSet& a, const AtomSet& b, const DistributionOptions& opt) {
  AtomSet out;
  require(a.atoms.size() * b.atoms.size() <= 8 * opt.max_support, ErrorKind::CutoffTooLoose,
          "convolution support exceeds the configured bound");
  out.atoms.reserve(a.atoms.size() * b.atoms.size());
  for (const Atom& x : a.atoms)
    for (const Atom& y : b.atoms)
      out.atoms.push_back({x.work + y.work, x.weight * y.weight, x.tilted * y.tilted});
  // kept fraction multiplies; discarded = 1 - (1 - fa)(1 - fb)
  out.forward_missing = a.forward_missing + b.forward_missing - a.forward_missing * b.forward_missing;
  out.tilted_missing = a.tilted_missing + b.tilted_missing - a.tilted_missing * b.tilted_missing;
  merge_and_prune(out, opt.prune_threshold);
  require(out.atoms.size() <= opt.max_support, ErrorKind::CutoffTooLoose,
          "convolution support exceeds the configured bound");
  return out;
}

inline WorkDistribution to_distribution(const AtomSet& set, bool zero_t) {
  WorkDistribution d;
  d.support.reserve(set.atoms.size());
  d.weights.reserve(set.atoms.size());
  for (const Atom& a : set.atoms) {
    d.support.push_back(a.work);
    d.weights.push_back(a.weight);
  }
  d.truncation_error = set.forward_missing;
  d.tilted_truncation_error = zero_t ? 0.0 : set.tilted_missing;
  return d;
}

}  // namespace detail

inline WorkDistribution mode_work_distribution(double wi, double wf, double beta, double weight_cutoff,
                                               const DistributionOptions& opt = {}) {
  return detail::to_distribution(detail::mode_atoms(wi, wf, beta, weight_cutoff, opt),
                                 std::isinf(beta));
}

/// Two-point-measurement P(W): per-mode distributions convolved across modes.
inline WorkDistribution work_distribution(const ModelParams& p, const QuenchSpec& q,
                                          double weight_cutoff, const DistributionOptions& opt = {}) {
  const auto modes = detail::quench_modes(p, q);
  require(weight_cutoff > 0.0 && weight_cutoff < 1.0, ErrorKind::InvalidArgument,
          "weight_cutoff must lie in (0, 1)");
  if (q.identity()) return WorkDistribution{{0.0}, {1.0}, 0.0, 0.0};
  detail::AtomSet acc;
  acc.atoms.push_back({0.0, 1.0, 1.0});
  for (std::size_t k = 0; k < modes.initial.size(); ++k) {
    const auto mode = detail::mode_atoms(modes.initial[k], modes.final[k], p.beta, weight_cutoff, opt);
    acc = detail::convolve(acc, mode, opt);
  }
  return detail::to_distribution(acc, p.zero_temperature());
}

struct CrooksCheck {
  double max_deviation = 0.0;  ///< max |P_F(W) e^{-beta (W - dF)} / P_B(-W) - 1|
  std::size_t points = 0;      ///< shared support points compared
  double l1_deviation = 0.0;   ///< sum over W of |P_F(W) e^{-beta (W - dF)} - P_B(-W)|, whole support
};

/// Compares a forward distribution with the backward one (reverse quench, thermal start at the
/// final frequencies). The ratio uses atoms carrying at least `min_weight` in both; the L1 sum
/// covers every atom and is bounded by forward.tilted_truncation_error + backward.truncation_error.
inline CrooksCheck crooks_check(const WorkDistribution& forward, const WorkDistribution& backward, double beta,
                                double delta_F, double min_weight = 1e-8) {
  require(std::isfinite(beta) && beta > 0.0, ErrorKind::InvalidArgument, "Crooks check needs finite beta");
  CrooksCheck out;
  std::vector<double> terms;
  double matched_b = 0.0;
  for (std::size_t i = 0; i < forward.support.size(); ++i) {
    const double pf = forward.weights[i];
    const double pb = backward.weight_at(-forward.support[i], 1e-9);
    const double tilted = pf > 0.0 ? std::exp(std::log(pf) - beta * (forward.support[i] - delta_F)) : 0.0;
    terms.push_back(std::abs(tilted - pb));
    matched_b += pb;
    if (pf < min_weight || pb < min_weight) continue;
    out.max_deviation = std::max(out.max_deviation, std::abs(tilted / pb - 1.0));
    ++out.points;
  }
  terms.push_back(std::max(0.0, backward.total_weight() - matched_b));
  out.l1_deviation = pairwise_sum(terms);
  return out;
}

// ---------------------------------------------------------------------------
// Soft mode (k = pi)

/// Frequency of the k = pi mode: g sqrt(w^2 - h1) (linear) or g sqrt(2 (h1 - w^2)) (zigzag).
inline double soft_mode_frequency(const ModelParams& p) {
  const double d = p.omega_sq - p.constants.h1;
  return d >= 0.0 ? p.g * std::sqrt(d) : p.g * std::sqrt(-2.0 * d);
}

struct SoftModeContribution {
  double w_irr;
  double sigma_sq;
};

/// Leading-order soft-mode terms g dw^2 / (8 gamma_W |w^2-h1|^{3/2}), g^2 dw^2 / (gamma_s |w^2-h1|).
inline SoftModeContribution soft_mode_scaling(const ModelParams& p, const QuenchSpec& q) {
  p.validate();
  require(p.zero_temperature(), ErrorKind::InvalidArgument, "soft-mode scaling is a beta = inf result");
  const Phase phase = classify_phase(q.omega_sq_initial(), p.constants);
  require(phase != Phase::Critical, ErrorKind::AtCriticality, "soft-mode scaling diverges at h1");
  const bool linear = phase == Phase::Linear;
  const double gamma_w = linear ? 2.0 : std::numbers::sqrt2;
  const double gamma_s = linear ? 8.0 : 4.0;
  const double dist = std::abs(q.omega_sq_initial() - p.constants.h1);
  const double dw2 = q.delta_omega() * q.delta_omega();
  return {p.g * dw2 / (8.0 * gamma_w * std::pow(dist, 1.5)), p.g * p.g * dw2 / (gamma_s * dist)};
}

/// Exact k = pi terms of the mode sums (any beta).
inline SoftModeContribution soft_mode_exact(const ModelParams& p, const QuenchSpec& q) {
  p.validate();
  require(q.same_phase(p.constants), ErrorKind::PhaseMismatch, "quench crosses h1");
  const double wi = soft_mode_frequency(p.with_omega_sq(q.omega_sq_initial()));
  const double wf = soft_mode_frequency(p.with_omega_sq(q.omega_sq_final()));
  const auto s = mode_work_statistics(wi, wf, p.beta);
  return {s.irreversible_work, *s.variance};
}

// ---------------------------------------------------------------------------
// Thermodynamic limit

/// (L / 2pi) * integral over the Brillouin zone of (w_k^f - w_k^i)^2 / (4 w_k^i), linear
/// phase, beta = inf. The window |k - pi| < k_cutoff uses the quadratic expansion
/// w_k^2 ~ g^2 (w^2 - h1 + h2 q^2) integrated in closed form; the rest is adaptive
/// Gauss-Kronrod quadrature.
inline double thermodynamic_limit_wirr(const ModelParams& p, const QuenchSpec& q, double k_cutoff) {
  p.validate();
  require(p.zero_temperature(), ErrorKind::InvalidArgument, "thermodynamic limit implemented at beta = inf");
  require(k_cutoff > 0.0 && k_cutoff < std::numbers::pi, ErrorKind::InvalidArgument,
          "k_cutoff must lie in (0, pi)");
  const auto& c = p.constants;
  const double ei = q.omega_sq_initial() - c.h1;
  const double ef = q.omega_sq_final() - c.h1;
  require(ei >= 0.0 && ef >= 0.0, ErrorKind::PhaseMismatch, "thermodynamic limit needs the linear phase");
  require(ei > 0.0, ErrorKind::AtCriticality, "initial soft mode is gapless");
  const double g = p.g;
  const double h2 = c.h2;

  // q = distance from the zone boundary; cos^2(k/2) = sin^2(q/2)
  auto integrand = [&](double qq) {
    const double s = std::sin(0.5 * qq);
    const double wi = g * std::sqrt(ei + 4.0 * h2 * s * s);
    const double wf = g * std::sqrt(ef + 4.0 * h2 * s * s);
    return (wf - wi) * (wf - wi) / (4.0 * wi);
  };
  const double outer = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, k_cutoff, std::numbers::pi, 20, 1e-13);

  const double sh = std::sqrt(h2);
  auto inv_sqrt_integral = [&](double e) { return std::asinh(k_cutoff * sh / std::sqrt(e)) / sh; };
  auto sqrt_integral = [&](double e) {
    const double r = std::sqrt(e + h2 * k_cutoff * k_cutoff);
    if (e == 0.0) return 0.5 * sh * k_cutoff * k_cutoff;
    return 0.5 * (k_cutoff * r + e / sh * std::asinh(k_cutoff * sh / std::sqrt(e)));
  };
  // (wf - wi)^2 / (4 wi) = g/4 (ef - ei)/R_i + g/2 R_i - g/2 R_f,  R_x = sqrt(e_x + h2 q^2)
  const double inner = 0.25 * g * (ef - ei) * inv_sqrt_integral(ei) +
                       0.5 * g * (sqrt_integral(ei) - sqrt_integral(ef));
  return p.L / (2.0 * std::numbers::pi) * 2.0 * (inner + outer);
}

}  // namespace iccwork
