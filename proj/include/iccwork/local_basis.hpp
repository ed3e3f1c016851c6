#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "iccwork/errors.hpp"
#include "iccwork/model.hpp"

namespace iccwork {

/// Truncated eigenbasis of a reference oscillator -g^2/2 d^2/dy^2 + 1/2 (w_ref/g)^2 y^2.
struct LocalBasisSpec {
  int n_max = 11;                ///< local dimension d = n_max + 1
  double basis_frequency = 0.1;  ///< w_ref > 0

  int dim() const noexcept { return n_max + 1; }

  void validate() const {
    require(n_max >= 1, ErrorKind::InvalidArgument, "local dimension must be >= 2");
    require(basis_frequency > 0.0 && std::isfinite(basis_frequency), ErrorKind::InvalidArgument,
            "basis_frequency must be > 0");
  }

  friend bool operator==(const LocalBasisSpec&, const LocalBasisSpec&) = default;
};

/// g sqrt(w^2 - h1 + 2 h2), floored at g sqrt(2 h2) at and below h1.
inline double default_basis_frequency(const ModelParams& p) {
  const auto& c = p.constants;
  return p.g * std::sqrt(2.0 * c.h2 + std::max(0.0, p.omega_sq - c.h1));
}

inline LocalBasisSpec default_basis(const ModelParams& p, int local_dim) {
  return {local_dim - 1, default_basis_frequency(p)};
}

/// Projections P O P of y, y^2, y^4 and the kinetic term onto the d lowest levels.
/// Products are formed in an enlarged space before truncation so every entry is the
/// exact matrix element of the untruncated operator.
struct LocalOperators {
  Eigen::MatrixXd y;
  Eigen::MatrixXd y2;
  Eigen::MatrixXd y4;
  Eigen::MatrixXd kinetic;
};

inline LocalOperators local_operators(double g, const LocalBasisSpec& basis) {
  basis.validate();
  const int d = basis.dim();
  const int big = d + 4;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(big, big);
  for (int n = 1; n < big; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd ad = a.transpose();
  // y = sigma (a + a^dag)/sqrt(2), sigma^2 = g^2 / w_ref; T = (w_ref / 2) p_xi^2
  const double sigma = g / std::sqrt(basis.basis_frequency);
  const Eigen::MatrixXd y = sigma / std::sqrt(2.0) * (a + ad);
  const Eigen::MatrixXd diff = ad - a;
  const Eigen::MatrixXd p2 = -0.5 * diff * diff;
  const Eigen::MatrixXd y2 = y * y;
  const Eigen::MatrixXd y4 = y2 * y2;
  LocalOperators ops;
  ops.y = y.topLeftCorner(d, d);
  ops.y2 = y2.topLeftCorner(d, d);
  ops.y4 = y4.topLeftCorner(d, d);
  ops.kinetic = (0.5 * basis.basis_frequency * p2).topLeftCorner(d, d);
  return ops;
}

}  // namespace iccwork
