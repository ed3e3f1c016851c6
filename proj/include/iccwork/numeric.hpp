#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "iccwork/errors.hpp"

namespace iccwork {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Pairwise (cascade) summation; the result depends only on the input order.
inline double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 8;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Riemann zeta for real s > 1 through the alternating (Dirichlet eta) series
/// with Borwein's acceleration; `terms` = 40 is far below double round-off.
inline double riemann_zeta(double s, int terms = 40) {
  require(s > 1.0, ErrorKind::InvalidArgument, "riemann_zeta needs s > 1");
  const int n = terms;
  // long double keeps the alternating sum within an ulp of the double result
  std::vector<long double> d(static_cast<std::size_t>(n) + 1);
  // t_i = (n+i-1)! 4^i / ((n-i)! (2i)!), d_k = n * sum_{i<=k} t_i
  long double t = 1.0L / n;
  long double acc = 0.0L;
  for (int i = 0; i <= n; ++i) {
    acc += t;
    d[static_cast<std::size_t>(i)] = n * acc;
    t *= 4.0L * (n + i) * (n - i) / ((2.0L * i + 1.0L) * (2.0L * i + 2.0L));
  }
  const long double dn = d[static_cast<std::size_t>(n)];
  long double eta = 0.0L;
  for (int k = 0; k < n; ++k) {
    const long double sign = (k % 2 == 0) ? 1.0L : -1.0L;
    eta += sign * (d[static_cast<std::size_t>(k)] - dn) / std::pow(static_cast<long double>(k + 1), static_cast<long double>(s));
  }
  eta = -eta / dn;
  return static_cast<double>(eta / (1.0L - std::pow(2.0L, 1.0L - static_cast<long double>(s))));
}

inline std::vector<double> linspace(double start, double stop, int count) {
  require(count >= 1, ErrorKind::InvalidArgument, "linspace needs count >= 1");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = start;
    return out;
  }
  const double step = (stop - start) / (count - 1);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = start + step * i;
  out.back() = stop;
  return out;
}

inline std::vector<double> logspace(double start, double stop, int count) {
  require(start > 0.0 && stop > 0.0, ErrorKind::InvalidArgument, "logspace needs positive bounds");
  auto exps = linspace(std::log(start), std::log(stop), count);
  for (double& e : exps) e = std::exp(e);
  if (count > 1) {
    exps.front() = start;
    exps.back() = stop;
  }
  return exps;
}

/// log(sinh(x)) for x > 0 without overflow.
inline double log_sinh(double x) {
  if (x > 20.0) return x - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * x));
  return std::log(std::sinh(x));
}

}  // namespace iccwork
