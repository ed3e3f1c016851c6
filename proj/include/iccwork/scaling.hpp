#pragma once

// Peak extraction, critical-point extrapolation and data collapse for W_IRR(w^2, L) curves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/minima.hpp>

#include "iccwork/errors.hpp"
#include "iccwork/model.hpp"

namespace iccwork {

enum class Source { harmonic, dmrg };

constexpr std::string_view to_string(Source s) noexcept { return s == Source::harmonic ? "harmonic" : "dmrg"; }

inline Source parse_source(std::string_view s) {
  if (s == "harmonic") return Source::harmonic;
  if (s == "dmrg") return Source::dmrg;
  fail(ErrorKind::SchemaError, "unknown source tag '" + std::string(s) + "'");
}

struct ScalingRow {
  int L = 0;
  double omega_sq = 0.0;
  double g = 0.0;
  double w_irr = 0.0;
  std::optional<double> y_sq_total;
  std::optional<double> energy;
  Source source = Source::dmrg;
};

struct SweepTable {
  std::vector<ScalingRow> rows;

  /// Unique (L, w^2, source) keys and strictly increasing w^2 inside each (L, source) group.
  void validate() const {
    std::map<std::pair<int, Source>, double> last;
    for (const auto& r : rows) {
      const auto key = std::make_pair(r.L, r.source);
      const auto it = last.find(key);
      require(it == last.end() || r.omega_sq > it->second, ErrorKind::SchemaError,
              "omega_sq must be strictly increasing within each (L, source) group (L = " + std::to_string(r.L) + ")");
      last[key] = r.omega_sq;
    }
  }

  std::vector<int> sizes(Source source) const {
    std::set<int> s;
    for (const auto& r : rows)
      if (r.source == source) s.insert(r.L);
    return {s.begin(), s.end()};
  }

  /// (w^2, W_IRR) of one curve, ordered by w^2.
  std::pair<std::vector<double>, std::vector<double>> curve(int L, Source source) const {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows)
      if (r.L == L && r.source == source) pts.emplace_back(r.omega_sq, r.w_irr);
    std::sort(pts.begin(), pts.end());
    std::pair<std::vector<double>, std::vector<double>> out;
    for (const auto& [x, y] : pts) {
      out.first.push_back(x);
      out.second.push_back(y);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Least squares helpers

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), ErrorKind::InvalidArgument, "linear_fit: size mismatch");
  require(xs.size() >= 2, ErrorKind::TooFewPoints, "linear_fit needs at least 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > 0.0, ErrorKind::DegenerateFit, "linear_fit: all abscissae equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

/// Least squares on (ln x, ln y).
inline LinearFit loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), ErrorKind::InvalidArgument, "loglog_slope: size mismatch");
  require(xs.size() >= 4, ErrorKind::TooFewPoints, "loglog_slope needs at least 4 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(xs[i] > 0.0 && ys[i] > 0.0, ErrorKind::NonPositiveData, "loglog_slope needs positive data");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return linear_fit(lx, ly);
}

// ---------------------------------------------------------------------------
// Peaks

struct PeakEstimate {
  double omega_star_sq = 0.0;
  double w_irr_max = 0.0;
  int stencil = 0;           ///< points used in the quadratic fit
  double uncertainty = 0.0;  ///< standard error of the vertex from the fit residuals (0 for exact fits)
};

/// Quadratic fit through 5 points around the discrete argmax (3 when a neighbour pair is missing).
inline PeakEstimate find_peak(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), ErrorKind::InvalidArgument, "find_peak: size mismatch");
  require(xs.size() >= 5, ErrorKind::TooFewPoints, "find_peak needs at least 5 grid points");
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
  const std::ptrdiff_t k = std::max_element(ys.begin(), ys.end()) - ys.begin();
  require(k > 0 && k < n - 1, ErrorKind::EdgePeak,
          "maximum at the end of the swept interval (w^2 = " + std::to_string(xs[static_cast<std::size_t>(k)]) + ")");
  const std::ptrdiff_t half = (k >= 2 && k + 2 < n) ? 2 : 1;
  const std::ptrdiff_t m = 2 * half + 1;
  const double x0 = xs[static_cast<std::size_t>(k)];
  const double h = std::max(std::abs(xs[static_cast<std::size_t>(k + half)] - x0), std::abs(xs[static_cast<std::size_t>(k - half)] - x0));
  const double ymax = ys[static_cast<std::size_t>(k)];
  const double yscale = std::abs(ymax) > 0.0 ? std::abs(ymax) : 1.0;
  Eigen::MatrixXd A(m, 3);
  Eigen::VectorXd b(m);
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const auto idx = static_cast<std::size_t>(k - half + i);
    const double t = (xs[idx] - x0) / h;
    A(i, 0) = 1.0;
    A(i, 1) = t;
    A(i, 2) = t * t;
    b(i) = ys[idx] / yscale;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::Vector3d c = qr.solve(b);
  PeakEstimate pk;
  pk.stencil = static_cast<int>(m);
  if (!(c(2) < 0.0)) {
    // flat or convex stencil: fall back to the grid maximum
    pk.omega_star_sq = x0;
    pk.w_irr_max = ymax;
    pk.uncertainty = h;
    return pk;
  }
  const double tv = -c(1) / (2.0 * c(2));
  pk.omega_star_sq = x0 + h * tv;
  pk.w_irr_max = yscale * (c(0) + c(1) * tv + c(2) * tv * tv);
  if (m > 3) {
    const double rss = (A * c - b).squaredNorm();
    const double s2 = rss / static_cast<double>(m - 3);
    const Eigen::Matrix3d cov = s2 * (A.transpose() * A).inverse();
    const Eigen::Vector3d grad(0.0, -1.0 / (2.0 * c(2)), c(1) / (2.0 * c(2) * c(2)));
    pk.uncertainty = h * std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  }
  return pk;
}

inline PeakEstimate find_peak(const SweepTable& table, int L, Source source = Source::dmrg) {
  const auto [xs, ys] = table.curve(L, source);
  return find_peak(xs, ys);
}

// ---------------------------------------------------------------------------
// Critical point extrapolation

struct PowerLawFit {
  int p = 1;
  double omega_c_sq = 0.0;
  double c = 0.0;
  double rss = 0.0;
  double aic = 0.0;
};

struct CriticalExtrapolation {
  PowerLawFit fit_p1;
  PowerLawFit fit_p2;
  int selected_p = 1;
  double omega_c_sq = 0.0;
  std::optional<double> estimate;  ///< small-g estimate of the critical w^2, when g was given
  bool below_h1 = false;

  const PowerLawFit& selected() const { return selected_p == 1 ? fit_p1 : fit_p2; }
};

/// Fits w*^2(L) = w_C^2 + c L^-p for p = 1, 2 and selects the lower AIC.
inline CriticalExtrapolation extrapolate_critical(const std::map<int, PeakEstimate>& peaks,
                                                  std::optional<double> g = std::nullopt,
                                                  const UniversalConstants& constants = UniversalConstants::standard()) {
  require(peaks.size() >= 3, ErrorKind::DegenerateFit, "extrapolation needs at least 3 distinct sizes");
  const auto n = static_cast<Eigen::Index>(peaks.size());
  auto fit = [&](int p) {
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    Eigen::Index i = 0;
    for (const auto& [L, pk] : peaks) {
      require(L > 0, ErrorKind::DegenerateFit, "sizes must be positive");
      A(i, 0) = 1.0;
      A(i, 1) = std::pow(static_cast<double>(L), -p);
      b(i) = pk.omega_star_sq;
      ++i;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    require(qr.rank() == 2, ErrorKind::DegenerateFit, "singular extrapolation design");
    const Eigen::Vector2d c = qr.solve(b);
    PowerLawFit f;
    f.p = p;
    f.omega_c_sq = c(0);
    f.c = c(1);
    f.rss = (A * c - b).squaredNorm();
    const double scale = std::max(1.0, b.squaredNorm());
    // exact fits get a floor relative to the data so that AIC stays finite
    const double rss = std::max(f.rss, 1e-30 * scale);
    f.aic = static_cast<double>(n) * std::log(rss / static_cast<double>(n)) + 2.0 * 2.0;
    return f;
  };
  CriticalExtrapolation out;
  out.fit_p1 = fit(1);
  out.fit_p2 = fit(2);
  out.selected_p = out.fit_p2.aic < out.fit_p1.aic ? 2 : 1;
  out.omega_c_sq = out.selected().omega_c_sq;
  if (g) out.estimate = critical_omega_estimate(*g, constants);
  out.below_h1 = out.omega_c_sq < constants.h1;
  return out;
}

// ---------------------------------------------------------------------------
// Data collapse

enum class Ordinate { exponential, linearized };

struct RescaledPoint {
  int L = 0;
  double x = 0.0;
  double y = 0.0;
};

struct CollapseResult {
  double nu = 0.0;
  double quality = 0.0;
  std::vector<std::pair<double, double>> profile;  ///< (nu, quality) on the scan grid
  std::map<int, double> omega_star_per_L;
  std::vector<RescaledPoint> rescaled;  ///< curves at the selected nu
  double nu_linearized = 0.0;           ///< same estimator with the linearized ordinate
  bool ordinates_agree = false;         ///< |nu - nu_linearized| within one scan step
};

struct CollapseOptions {
  int samples = 101;  ///< common abscissa points on the overlap
  Source source = Source::dmrg;
};

namespace detail {

struct Curve {
  int L;
  std::vector<double> omega_sq;
  std::vector<double> w_irr;
  double omega_star_sq;
  double w_max;
};

inline double ordinate(Ordinate kind, double w, double w_max, int L) {
  const double u = (w - w_max) / static_cast<double>(L);
  return kind == Ordinate::exponential ? -std::expm1(u) : -u;
}

inline std::vector<RescaledPoint> rescale(const Curve& c, double nu, Ordinate kind) {
  std::vector<RescaledPoint> out;
  const double s = std::pow(static_cast<double>(c.L), 1.0 / nu);
  for (std::size_t i = 0; i < c.omega_sq.size(); ++i)
    out.push_back({c.L, s * (c.omega_sq[i] - c.omega_star_sq), ordinate(kind, c.w_irr[i], c.w_max, c.L)});
  return out;
}

/// Mean squared pairwise spread of the curves on a common grid over their abscissa overlap.
inline double collapse_quality(const std::vector<Curve>& curves, double nu, Ordinate kind, int samples) {
  double lo = -kInfinity, hi = kInfinity;
  std::vector<boost::math::interpolators::pchip<std::vector<double>>> interp;
  std::vector<std::pair<double, double>> range;
  for (const auto& c : curves) {
    const auto pts = rescale(c, nu, kind);
    std::vector<double> x, y;
    for (const auto& p : pts) {
      x.push_back(p.x);
      y.push_back(p.y);
    }
    lo = std::max(lo, x.front());
    hi = std::min(hi, x.back());
    range.emplace_back(x.front(), x.back());
    interp.emplace_back(std::move(x), std::move(y));
  }
  require(hi > lo, ErrorKind::NoOverlap, "rescaled curves do not overlap");
  double sum = 0.0;
  long count = 0;
  std::vector<double> v(curves.size());
  for (int i = 0; i < samples; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
    for (std::size_t a = 0; a < curves.size(); ++a) v[a] = interp[a](std::clamp(x, range[a].first, range[a].second));
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = a + 1; b < v.size(); ++b) {
        sum += (v[a] - v[b]) * (v[a] - v[b]);
        ++count;
      }
  }
  return sum / static_cast<double>(count);
}

/// Grid scan followed by a bracketed one-dimensional minimization around the best grid point.
inline std::pair<double, double> minimize_quality(const std::vector<Curve>& curves, const std::vector<double>& nu_grid,
                                                  Ordinate kind, int samples,
                                                  std::vector<std::pair<double, double>>* profile) {
  std::size_t best = 0;
  std::vector<double> q(nu_grid.size());
  for (std::size_t i = 0; i < nu_grid.size(); ++i) {
    q[i] = collapse_quality(curves, nu_grid[i], kind, samples);
    if (q[i] < q[best]) best = i;
    if (profile) profile->emplace_back(nu_grid[i], q[i]);
  }
  const double a = nu_grid[best > 0 ? best - 1 : best];
  const double b = nu_grid[best + 1 < nu_grid.size() ? best + 1 : best];
  if (!(b > a)) return {nu_grid[best], q[best]};
  auto f = [&](double nu) { return collapse_quality(curves, nu, kind, samples); };
  const auto r = boost::math::tools::brent_find_minima(f, a, b, 40);
  if (r.second <= q[best]) return r;
  return {nu_grid[best], q[best]};
}

}  // namespace detail

/// Collapse of 1 - exp[(W_IRR - W_max)/L] against L^{1/nu} (w^2 - w*^2(L)), with w*^2 and W_max per L.
inline CollapseResult collapse(const SweepTable& table, const std::map<int, PeakEstimate>& peaks,
                               const std::vector<double>& nu_grid, const CollapseOptions& opt = {}) {
  require(nu_grid.size() >= 2, ErrorKind::InvalidArgument, "nu grid needs at least 2 points");
  require(std::is_sorted(nu_grid.begin(), nu_grid.end()) && nu_grid.front() > 0.0, ErrorKind::InvalidArgument,
          "nu grid must be positive and increasing");
  require(opt.samples >= 2, ErrorKind::InvalidArgument, "need at least 2 samples");
  std::vector<detail::Curve> curves;
  for (const auto& [L, pk] : peaks) {
    auto [x, y] = table.curve(L, opt.source);
    require(x.size() >= 4, ErrorKind::TooFewPoints, "collapse needs at least 4 points per curve");
    curves.push_back({L, std::move(x), std::move(y), pk.omega_star_sq, pk.w_irr_max});
  }
  require(curves.size() >= 3, ErrorKind::TooFewPoints, "collapse needs at least 3 sizes");
  CollapseResult out;
  for (const auto& c : curves) out.omega_star_per_L[c.L] = c.omega_star_sq;
  std::tie(out.nu, out.quality) =
      detail::minimize_quality(curves, nu_grid, Ordinate::exponential, opt.samples, &out.profile);
  out.nu_linearized = detail::minimize_quality(curves, nu_grid, Ordinate::linearized, opt.samples, nullptr).first;
  double step = kInfinity;
  for (std::size_t i = 1; i < nu_grid.size(); ++i) step = std::min(step, nu_grid[i] - nu_grid[i - 1]);
  out.ordinates_agree = std::abs(out.nu - out.nu_linearized) <= step;
  for (const auto& c : curves) {
    const auto pts = detail::rescale(c, out.nu, Ordinate::exponential);
    out.rescaled.insert(out.rescaled.end(), pts.begin(), pts.end());
  }
  return out;
}

inline std::vector<double> linear_grid(double lo, double hi, int count) {
  require(count >= 2 && hi > lo, ErrorKind::InvalidArgument, "grid needs count >= 2 and hi > lo");
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  return g;
}

}  // namespace iccwork
