#pragma once

// Short-range transverse model of the linear-zigzag transition:
//   H(w) = 1/2 sum_j [ -g^2 d^2/dy_j^2 + (w^2 - h1) y_j^2 + h2 (y_j + y_{j+1})^2 + h3 y_j^4 ]
// in dimensionless units. w^2 ("omega_sq") is the control parameter everywhere.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "iccwork/errors.hpp"
#include "iccwork/numeric.hpp"

namespace iccwork {

struct UniversalConstants {
  double h1;  ///< 7 zeta(3) / 2
  double h2;  ///< ln 2
  double h3;  ///< 93 zeta(5) / 8

  static UniversalConstants standard() {
    static const UniversalConstants c{3.5 * riemann_zeta(3.0), std::numbers::ln2,
                                      93.0 / 8.0 * riemann_zeta(5.0)};
    return c;
  }
};

enum class Boundary { periodic, open };
enum class Phase { Linear, Zigzag, Critical };

inline constexpr double kCriticalTolerance = 1e-9;

constexpr std::string_view to_string(Boundary b) noexcept {
  return b == Boundary::periodic ? "periodic" : "open";
}

constexpr std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Linear: return "linear";
    case Phase::Zigzag: return "zigzag";
    case Phase::Critical: return "critical";
  }
  return "unknown";
}

inline Boundary parse_boundary(std::string_view s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "open") return Boundary::open;
  fail(ErrorKind::ConfigError, "unknown boundary '" + std::string(s) + "'");
}

/// One system instance. beta = kInfinity selects the zero-temperature paths.
struct ModelParams {
  double g = 0.1;
  double omega_sq = 5.0;
  int L = 2;
  double beta = kInfinity;
  Boundary boundary = Boundary::periodic;
  UniversalConstants constants = UniversalConstants::standard();

  bool zero_temperature() const noexcept { return std::isinf(beta); }

  void validate() const {
    require(std::isfinite(g) && g > 0.0, ErrorKind::InvalidArgument, "g must be > 0");
    require(std::isfinite(omega_sq), ErrorKind::InvalidArgument, "omega_sq must be finite");
    require(L >= 1, ErrorKind::InvalidArgument, "L must be >= 1");
    require(beta > 0.0, ErrorKind::InvalidArgument, "beta must be > 0 or infinite");
  }

  ModelParams with_omega_sq(double w2) const {
    ModelParams p = *this;
    p.omega_sq = w2;
    return p;
  }
};

inline Phase classify_phase(double omega_sq, const UniversalConstants& c,
                            double tol = kCriticalTolerance) {
  require(tol >= 0.0, ErrorKind::InvalidArgument, "tolerance must be >= 0");
  const double delta = omega_sq - c.h1;
  if (std::abs(delta) <= tol) return Phase::Critical;
  return delta > 0.0 ? Phase::Linear : Phase::Zigzag;
}

inline Phase classify_phase(const ModelParams& p, double tol = kCriticalTolerance) {
  return classify_phase(p.omega_sq, p.constants, tol);
}

/// Sudden change w_i^2 -> w_f^2 of the transverse frequency.
class QuenchSpec {
 public:
  QuenchSpec(double omega_sq_initial, double omega_sq_final)
      : initial_(omega_sq_initial), final_(omega_sq_final) {
    require(std::isfinite(initial_) && std::isfinite(final_), ErrorKind::InvalidArgument,
            "quench endpoints must be finite");
  }

  /// Quench of size delta_omega from w2, upwards (+1) or downwards (-1).
  static QuenchSpec from_delta(double omega_sq, double delta_omega, int direction = +1) {
    require(delta_omega >= 0.0, ErrorKind::InvalidArgument, "delta_omega must be >= 0");
    return QuenchSpec(omega_sq, omega_sq + (direction >= 0 ? delta_omega : -delta_omega));
  }

  double omega_sq_initial() const noexcept { return initial_; }
  double omega_sq_final() const noexcept { return final_; }
  double signed_delta() const noexcept { return final_ - initial_; }
  double delta_omega() const noexcept { return std::abs(final_ - initial_); }
  bool identity() const noexcept { return initial_ == final_; }

  bool same_phase(const UniversalConstants& c, double tol = kCriticalTolerance) const {
    return classify_phase(initial_, c, tol) == classify_phase(final_, c, tol);
  }

 private:
  double initial_;
  double final_;
};

/// Small-g estimate h1 - 3 h3 g |ln g| / (2 pi) of the quantum critical w^2.
inline double critical_omega_estimate(double g,
                                      const UniversalConstants& c = UniversalConstants::standard()) {
  require(g > 0.0 && g < 1.0, ErrorKind::InvalidArgument,
          "critical_omega_estimate is a small-g expansion; needs 0 < g < 1");
  return c.h1 - 3.0 * c.h3 * g * std::abs(std::log(g)) / (2.0 * std::numbers::pi);
}

/// Classical staggered displacement b/2 of the zigzag minimum, (b/2)^2 = (h1 - w^2) / (2 h3).
inline double zigzag_amplitude(const ModelParams& p) {
  const auto& c = p.constants;
  require(p.omega_sq <= c.h1, ErrorKind::InvalidArgument,
          "no zigzag minimum for omega_sq above h1");
  return std::sqrt((c.h1 - p.omega_sq) / (2.0 * c.h3));
}

}  // namespace iccwork
