#pragma once

// Brute-force reference implementations. Nothing here shares numerical kernels
// with the engines it validates: local matrices come from Gauss-Hermite
// quadrature of Hermite functions (not ladder algebra), the many-body
// Hamiltonian is assembled site by site from the potential's bond terms, and the
// eigensolvers are Eigen's dense solver and a stored-basis Lanczos with full
// reorthogonalization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "iccwork/errors.hpp"
#include "iccwork/harmonic.hpp"
#include "iccwork/local_basis.hpp"
#include "iccwork/model.hpp"

namespace iccwork::oracle {

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature (weight exp(-x^2))

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Normalized Hermite polynomials h_k(x) (orthonormal for exp(-x^2)), k < count.
inline std::vector<double> hermite_orthonormal(double x, int count) {
  std::vector<double> h(static_cast<std::size_t>(std::max(count, 1)));
  h[0] = std::pow(std::numbers::pi, -0.25);
  if (count > 1) h[1] = std::sqrt(2.0) * x * h[0];
  for (int k = 1; k + 1 < count; ++k) {
    h[static_cast<std::size_t>(k + 1)] =
        std::sqrt(2.0 / (k + 1)) * x * h[static_cast<std::size_t>(k)] -
        std::sqrt(static_cast<double>(k) / (k + 1)) * h[static_cast<std::size_t>(k - 1)];
  }
  return h;
}

/// Golub-Welsch nodes; weights from the Christoffel sum 1 / sum_k h_k(x_j)^2,
/// which keeps full relative accuracy in the tails.
inline QuadratureRule gauss_hermite(int n) {
  require(n >= 1, ErrorKind::InvalidArgument, "quadrature order must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  QuadratureRule rule;
  for (int j = 0; j < n; ++j) {
    const double x = es.eigenvalues()(j);
    const auto h = hermite_orthonormal(x, n);
    double s = 0.0;
    for (double v : h) s += v * v;
    rule.nodes.push_back(x);
    rule.weights.push_back(1.0 / s);
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Single-mode two-point measurement by brute force

/// <m_f | n_i> for unit-mass oscillators of frequency wf, wi, by quadrature.
inline Eigen::MatrixXd quadrature_overlaps(double wi, double wf, int max_m, int max_n) {
  const int order = (max_m + max_n) / 2 + 8;
  const auto rule = gauss_hermite(order);
  const double s = std::sqrt(2.0 / (wi + wf));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(max_m + 1, max_n + 1);
  const double pref = s * std::pow(wi * wf, 0.25);
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double x = s * rule.nodes[j];
    const auto hf = hermite_orthonormal(std::sqrt(wf) * x, max_m + 1);
    const auto hi = hermite_orthonormal(std::sqrt(wi) * x, max_n + 1);
    for (int m = 0; m <= max_m; ++m)
      for (int n = 0; n <= max_n; ++n)
        out(m, n) += pref * rule.weights[j] * hf[static_cast<std::size_t>(m)] *
                     hi[static_cast<std::size_t>(n)];
  }
  return out;
}

struct ModeTpm {
  std::vector<double> work;
  std::vector<double> probability;
  WorkStatistics stats;
};

/// Enumerates (n, m) transitions with n <= max_initial initial levels (thermal weights,
/// renormalized on the kept levels) and m <= max_final final levels. Negative counts pick
/// them from the Boltzmann tail: e^{-beta wi n} < e^{-40}, at least 60 and 160 levels.
inline ModeTpm brute_force_mode_tpm(double wi, double wf, double beta, int max_initial = -1,
                                    int max_final = -1) {
  if (max_initial < 0)
    max_initial = std::isinf(beta) ? 60 : std::clamp(static_cast<int>(std::ceil(40.0 / (beta * wi))), 60, 200);
  if (max_final < 0) max_final = std::max(160, 3 * max_initial);
  const auto I = quadrature_overlaps(wi, wf, max_final, max_initial);
  const bool zero_t = std::isinf(beta);
  const int levels_i = zero_t ? 0 : max_initial;
  std::vector<double> pi(static_cast<std::size_t>(levels_i) + 1);
  double zi = 0.0, zf = 0.0;
  for (int n = 0; n <= levels_i; ++n) {
    pi[static_cast<std::size_t>(n)] = zero_t ? 1.0 : std::exp(-beta * wi * n);
    zi += pi[static_cast<std::size_t>(n)];
  }
  for (double& p : pi) p /= zi;
  if (!zero_t)
    for (int m = 0; m <= max_initial; ++m) zf += std::exp(-beta * wf * m);

  ModeTpm out;
  double m1 = 0.0, m2 = 0.0;
  for (int n = 0; n <= levels_i; ++n) {
    for (int m = 0; m <= max_final; ++m) {
      const double prob = pi[static_cast<std::size_t>(n)] * I(m, n) * I(m, n);
      if (prob == 0.0) continue;
      const double w = wf * (m + 0.5) - wi * (n + 0.5);
      out.work.push_back(w);
      out.probability.push_back(prob);
      m1 += prob * w;
      m2 += prob * w * w;
    }
  }
  out.stats.mean_work = m1;
  // Z = e^{-beta w/2} * sum_n e^{-beta w n}
  out.stats.free_energy_difference =
      zero_t ? 0.5 * (wf - wi) : 0.5 * (wf - wi) - std::log(zf / zi) / beta;
  out.stats.irreversible_work = m1 - out.stats.free_energy_difference;
  out.stats.variance = m2 - m1 * m1;
  return out;
}

inline std::vector<std::complex<double>> fourier_of_atoms(const std::vector<double>& work,
                                                          const std::vector<double>& prob,
                                                          const std::vector<double>& times) {
  std::vector<std::complex<double>> out;
  out.reserve(times.size());
  for (double t : times) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < work.size(); ++i) acc += prob[i] * std::polar(1.0, work[i] * t);
    out.push_back(acc);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dense / sparse exact diagonalization of the lattice Hamiltonian

struct QuadratureLocalMatrices {
  Eigen::MatrixXd y, y2, y4, kinetic;
};

/// Projected local matrices from quadrature over the reference-oscillator eigenfunctions.
inline QuadratureLocalMatrices quadrature_local_matrices(double g, const LocalBasisSpec& basis) {
  basis.validate();
  const int d = basis.dim();
  const auto rule = gauss_hermite(d + 8);
  const double sigma = g / std::sqrt(basis.basis_frequency);
  QuadratureLocalMatrices mats;
  mats.y = mats.y2 = mats.y4 = mats.kinetic = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double xi = rule.nodes[j];
    const double w = rule.weights[j];
    const auto h = hermite_orthonormal(xi, d);
    // d/dxi [h_n e^{-xi^2/2}] = (sqrt(2n) h_{n-1} - xi h_n) e^{-xi^2/2}
    std::vector<double> dh(static_cast<std::size_t>(d));
    for (int n = 0; n < d; ++n) {
      const double prev = n > 0 ? std::sqrt(2.0 * n) * h[static_cast<std::size_t>(n - 1)] : 0.0;
      dh[static_cast<std::size_t>(n)] = prev - xi * h[static_cast<std::size_t>(n)];
    }
    const double y = sigma * xi;
    for (int m = 0; m < d; ++m) {
      for (int n = 0; n < d; ++n) {
        const double hh = w * h[static_cast<std::size_t>(m)] * h[static_cast<std::size_t>(n)];
        mats.y(m, n) += hh * y;
        mats.y2(m, n) += hh * y * y;
        mats.y4(m, n) += hh * y * y * y * y;
        mats.kinetic(m, n) += w * dh[static_cast<std::size_t>(m)] * dh[static_cast<std::size_t>(n)];
      }
    }
  }
  // -(g^2/2) d^2/dy^2 -> (g^2 / (2 sigma^2)) int phi_m' phi_n' dxi
  mats.kinetic *= g * g / (2.0 * sigma * sigma);
  return mats;
}

struct BasisDescriptor {
  int L = 0;
  int d = 0;
  double basis_frequency = 0.0;
  Boundary boundary = Boundary::open;
  friend bool operator==(const BasisDescriptor&, const BasisDescriptor&) = default;
};

struct OracleOptions {
  std::size_t max_dimension = 20000;
  double pinning = 0.0;  ///< staggered field eps (-1)^j y_j
};

inline std::vector<std::pair<int, int>> lattice_bonds(int L, Boundary boundary) {
  std::vector<std::pair<int, int>> bonds;
  for (int j = 0; j + 1 < L; ++j) bonds.emplace_back(j, j + 1);
  if (boundary == Boundary::periodic && L >= 2) bonds.emplace_back(L - 1, 0);
  return bonds;
}

inline std::size_t product_dimension(int L, int d, std::size_t bound) {
  std::size_t dim = 1;
  for (int j = 0; j < L; ++j) {
    dim *= static_cast<std::size_t>(d);
    require(dim <= bound, ErrorKind::DimensionTooLarge,
            "product-basis dimension exceeds " + std::to_string(bound));
  }
  return dim;
}

/// Sparse H in the product basis; site 0 is the most significant digit.
inline Eigen::SparseMatrix<double> assemble_hamiltonian(const ModelParams& p, const LocalBasisSpec& basis,
                                                        const OracleOptions& opt = {}) {
  p.validate();
  const int L = p.L;
  const int d = basis.dim();
  const std::size_t dim = product_dimension(L, d, opt.max_dimension);
  const auto m = quadrature_local_matrices(p.g, basis);
  const auto& c = p.constants;
  const Eigen::MatrixXd onsite =
      m.kinetic + 0.5 * (p.omega_sq - c.h1) * m.y2 + 0.5 * c.h3 * m.y4;

  std::vector<std::size_t> stride(static_cast<std::size_t>(L));
  {
    std::size_t s = 1;
    for (int j = L - 1; j >= 0; --j) {
      stride[static_cast<std::size_t>(j)] = s;
      s *= static_cast<std::size_t>(d);
    }
  }
  auto digit = [&](std::size_t idx, int j) {
    return static_cast<int>((idx / stride[static_cast<std::size_t>(j)]) % static_cast<std::size_t>(d));
  };
  std::vector<Eigen::Triplet<double>> trips;
  const double eps = 1e-300;
  for (std::size_t col = 0; col < dim; ++col) {
    for (int j = 0; j < L; ++j) {
      const int s = digit(col, j);
      const double stag = opt.pinning * ((j % 2 == 0) ? 1.0 : -1.0);
      for (int t = 0; t < d; ++t) {
        const double v = onsite(t, s) + stag * m.y(t, s);
        if (std::abs(v) < eps) continue;
        const std::size_t row = col + (static_cast<std::ptrdiff_t>(t) - s) * stride[static_cast<std::size_t>(j)];
        trips.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
      }
    }
    // 1/2 h2 (y_a + y_b)^2 = 1/2 h2 y_a^2 + 1/2 h2 y_b^2 + h2 y_a y_b
    for (const auto& [a, b] : lattice_bonds(L, p.boundary)) {
      const int sa = digit(col, a), sb = digit(col, b);
      for (int t = 0; t < d; ++t) {
        const double va = 0.5 * c.h2 * m.y2(t, sa);
        if (std::abs(va) >= eps) {
          const std::size_t row = col + (static_cast<std::ptrdiff_t>(t) - sa) * stride[static_cast<std::size_t>(a)];
          trips.emplace_back(static_cast<int>(row), static_cast<int>(col), va);
        }
        const double vb = 0.5 * c.h2 * m.y2(t, sb);
        if (std::abs(vb) >= eps) {
          const std::size_t row = col + (static_cast<std::ptrdiff_t>(t) - sb) * stride[static_cast<std::size_t>(b)];
          trips.emplace_back(static_cast<int>(row), static_cast<int>(col), vb);
        }
      }
      for (int ta = 0; ta < d; ++ta) {
        const double ya = m.y(ta, sa);
        if (std::abs(ya) < eps) continue;
        for (int tb = 0; tb < d; ++tb) {
          const double yb = m.y(tb, sb);
          if (std::abs(yb) < eps) continue;
          const std::size_t row = col +
                                  (static_cast<std::ptrdiff_t>(ta) - sa) * stride[static_cast<std::size_t>(a)] +
                                  (static_cast<std::ptrdiff_t>(tb) - sb) * stride[static_cast<std::size_t>(b)];
          trips.emplace_back(static_cast<int>(row), static_cast<int>(col), c.h2 * ya * yb);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> H(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  H.setFromTriplets(trips.begin(), trips.end());
  return H;
}

/// Sum_j y_j^2 (or the local operator `which`) as a sparse operator.
inline Eigen::SparseMatrix<double> assemble_site_sum(const Eigen::MatrixXd& local, int L, int d,
                                                     const std::vector<double>& site_weights) {
  std::size_t dim = 1;
  for (int j = 0; j < L; ++j) dim *= static_cast<std::size_t>(d);
  std::vector<std::size_t> stride(static_cast<std::size_t>(L));
  std::size_t s = 1;
  for (int j = L - 1; j >= 0; --j) {
    stride[static_cast<std::size_t>(j)] = s;
    s *= static_cast<std::size_t>(d);
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t col = 0; col < dim; ++col) {
    for (int j = 0; j < L; ++j) {
      const double wj = site_weights[static_cast<std::size_t>(j)];
      if (wj == 0.0) continue;
      const int sj = static_cast<int>((col / stride[static_cast<std::size_t>(j)]) % static_cast<std::size_t>(d));
      for (int t = 0; t < d; ++t) {
        const double v = wj * local(t, sj);
        if (v == 0.0) continue;
        const std::size_t row = col + (static_cast<std::ptrdiff_t>(t) - sj) * stride[static_cast<std::size_t>(j)];
        trips.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
      }
    }
  }
  Eigen::SparseMatrix<double> op(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  op.setFromTriplets(trips.begin(), trips.end());
  return op;
}

struct DenseSpectrum {
  Eigen::VectorXd eigenvalues;                 ///< ascending
  std::optional<Eigen::MatrixXd> eigenvectors;  ///< columns
  BasisDescriptor basis;
};

enum class EigenMethod { Auto, Dense, Krylov };

namespace detail {

struct KrylovResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Lanczos on a stored basis with two-pass full reorthogonalization; no restarts.
inline KrylovResult stored_basis_lanczos(const Eigen::SparseMatrix<double>& H, int count, double tol,
                                         int max_steps = 600) {
  const Eigen::Index n = H.rows();
  max_steps = static_cast<int>(std::min<Eigen::Index>(max_steps, n));
  Eigen::MatrixXd V(n, max_steps + 1);
  // deterministic, non-symmetric start vector
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * std::sin(1.0 + 0.37 * static_cast<double>(i));
  V.col(0) = v.normalized();
  std::vector<double> alpha, beta;
  KrylovResult res;
  for (int k = 0; k < max_steps; ++k) {
    Eigen::VectorXd w = H * V.col(k);
    alpha.push_back(V.col(k).dot(w));
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coeff = V.leftCols(k + 1).transpose() * w;
      w -= V.leftCols(k + 1) * coeff;
    }
    const double b = w.norm();
    const int m = k + 1;
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd off = Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    const int want = std::min(count, m);
    bool done = m >= count;
    for (int i = 0; i < want && done; ++i) {
      const double resid = std::abs(b * es.eigenvectors()(m - 1, i));
      if (resid > tol * std::max(1.0, std::abs(es.eigenvalues()(i)))) done = false;
    }
    if (done || b < 1e-14 || m == max_steps) {
      require(done || b < 1e-14, ErrorKind::NoConvergence, "oracle Lanczos did not converge");
      res.values = es.eigenvalues().head(want);
      res.vectors = V.leftCols(m) * es.eigenvectors().leftCols(want);
      for (int i = 0; i < want; ++i) res.vectors.col(i).normalize();
      return res;
    }
    beta.push_back(b);
    V.col(k + 1) = w / b;
  }
  fail(ErrorKind::NoConvergence, "oracle Lanczos exhausted its steps");
}

}  // namespace detail

/// Full spectrum (num_eigenpairs = 0) or the lowest num_eigenpairs levels.
inline DenseSpectrum exact_diagonalize(const ModelParams& p, const LocalBasisSpec& basis,
                                       int num_eigenpairs = 0, bool with_vectors = true,
                                       EigenMethod method = EigenMethod::Auto,
                                       const OracleOptions& opt = {}) {
  const auto H = assemble_hamiltonian(p, basis, opt);
  DenseSpectrum out;
  out.basis = {p.L, basis.dim(), basis.basis_frequency, p.boundary};
  const Eigen::Index dim = H.rows();
  if (method == EigenMethod::Auto)
    method = (num_eigenpairs == 0 || dim <= 1500) ? EigenMethod::Dense : EigenMethod::Krylov;
  if (method == EigenMethod::Dense) {
    const Eigen::MatrixXd dense = Eigen::MatrixXd(H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        dense, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    const Eigen::Index keep = num_eigenpairs == 0 ? dim : std::min<Eigen::Index>(num_eigenpairs, dim);
    out.eigenvalues = es.eigenvalues().head(keep);
    if (with_vectors) out.eigenvectors = es.eigenvectors().leftCols(keep);
    return out;
  }
  require(num_eigenpairs > 0, ErrorKind::InvalidArgument, "Krylov oracle needs num_eigenpairs > 0");
  auto kr = detail::stored_basis_lanczos(H, num_eigenpairs, 1e-11);
  out.eigenvalues = kr.values;
  if (with_vectors) out.eigenvectors = std::move(kr.vectors);
  return out;
}

struct ExactGroundState {
  double energy;
  double y_sq_total;
  std::vector<double> y_mean;
  std::vector<double> y_sq;
};

inline ExactGroundState exact_ground_state(const ModelParams& p, const LocalBasisSpec& basis,
                                           EigenMethod method = EigenMethod::Auto,
                                           const OracleOptions& opt = {}) {
  const auto spec = exact_diagonalize(p, basis, 1, true, method, opt);
  const Eigen::VectorXd psi = spec.eigenvectors->col(0);
  const auto m = quadrature_local_matrices(p.g, basis);
  ExactGroundState gs;
  gs.energy = spec.eigenvalues(0);
  gs.y_sq_total = 0.0;
  for (int j = 0; j < p.L; ++j) {
    std::vector<double> w(static_cast<std::size_t>(p.L), 0.0);
    w[static_cast<std::size_t>(j)] = 1.0;
    const auto y = assemble_site_sum(m.y, p.L, basis.dim(), w);
    const auto y2 = assemble_site_sum(m.y2, p.L, basis.dim(), w);
    gs.y_mean.push_back(psi.dot(y * psi));
    gs.y_sq.push_back(psi.dot(y2 * psi));
    gs.y_sq_total += gs.y_sq.back();
  }
  return gs;
}

/// Two-point-measurement distribution from two full spectra in the same truncated basis.
inline WorkDistribution tpm_work_distribution(const DenseSpectrum& initial, const DenseSpectrum& final_,
                                              double beta) {
  require(initial.basis == final_.basis, ErrorKind::BasisMismatch, "spectra use different bases");
  require(initial.eigenvectors && final_.eigenvectors, ErrorKind::InvalidArgument,
          "tpm_work_distribution needs eigenvectors");
  const auto& Vi = *initial.eigenvectors;
  const auto& Vf = *final_.eigenvectors;
  require(Vi.rows() == Vf.rows(), ErrorKind::BasisMismatch, "dimension mismatch");
  const Eigen::MatrixXd overlap = Vf.transpose() * Vi;  // (m, n)
  const Eigen::Index ni = std::isinf(beta) ? 1 : Vi.cols();
  std::vector<double> pn(static_cast<std::size_t>(ni));
  double z = 0.0;
  const double e0 = initial.eigenvalues(0);
  for (Eigen::Index n = 0; n < ni; ++n) {
    pn[static_cast<std::size_t>(n)] = std::isinf(beta) ? 1.0 : std::exp(-beta * (initial.eigenvalues(n) - e0));
    z += pn[static_cast<std::size_t>(n)];
  }
  std::vector<std::pair<double, double>> atoms;
  for (Eigen::Index n = 0; n < ni; ++n)
    for (Eigen::Index m = 0; m < Vf.cols(); ++m) {
      const double prob = pn[static_cast<std::size_t>(n)] / z * overlap(m, n) * overlap(m, n);
      atoms.emplace_back(final_.eigenvalues(m) - initial.eigenvalues(n), prob);
    }
  std::sort(atoms.begin(), atoms.end());
  WorkDistribution out;
  for (const auto& [w, prob] : atoms) {
    if (!out.support.empty() &&
        std::abs(out.support.back() - w) <= 1e-12 * std::max(1.0, std::abs(w))) {
      out.weights.back() += prob;
    } else {
      out.support.push_back(w);
      out.weights.push_back(prob);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classical normal modes

struct NormalModes {
  std::vector<double> curvatures;   ///< Hessian eigenvalues, ascending
  std::vector<double> frequencies;  ///< g sqrt(curvature)
};

inline std::vector<double> uniform_equilibrium(int L) { return std::vector<double>(static_cast<std::size_t>(L), 0.0); }

inline std::vector<double> staggered_equilibrium(const ModelParams& p) {
  const double a = zigzag_amplitude(p);
  std::vector<double> y(static_cast<std::size_t>(p.L));
  for (int j = 0; j < p.L; ++j) y[static_cast<std::size_t>(j)] = (j % 2 == 0) ? a : -a;
  return y;
}

/// Hessian of V(y) = 1/2 sum_j [(w^2 - h1) y_j^2 + h3 y_j^4] + 1/2 h2 sum_bonds (y_a + y_b)^2.
inline NormalModes hessian_normal_modes(const ModelParams& p, const std::vector<double>& equilibrium) {
  p.validate();
  const int L = p.L;
  require(static_cast<int>(equilibrium.size()) == L, ErrorKind::InvalidArgument, "equilibrium size != L");
  const auto& c = p.constants;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(L);
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(L, L);
  for (int j = 0; j < L; ++j) {
    const double y = equilibrium[static_cast<std::size_t>(j)];
    grad(j) += (p.omega_sq - c.h1) * y + 2.0 * c.h3 * y * y * y;
    hess(j, j) += (p.omega_sq - c.h1) + 6.0 * c.h3 * y * y;
  }
  for (const auto& [a, b] : lattice_bonds(L, p.boundary)) {
    const double sum = equilibrium[static_cast<std::size_t>(a)] + equilibrium[static_cast<std::size_t>(b)];
    grad(a) += c.h2 * sum;
    grad(b) += c.h2 * sum;
    hess(a, a) += c.h2;
    hess(b, b) += c.h2;
    hess(a, b) += c.h2;
    hess(b, a) += c.h2;
  }
  const double scale = std::max(1.0, hess.cwiseAbs().maxCoeff());
  require(grad.norm() < 1e-10 * scale, ErrorKind::NotStationary,
          "supplied configuration is not a stationary point (|grad| = " + std::to_string(grad.norm()) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess, Eigen::EigenvaluesOnly);
  NormalModes out;
  int unstable = 0;
  for (int i = 0; i < L; ++i) {
    double ev = es.eigenvalues()(i);
    if (std::abs(ev) <= 1e-12 * scale) ev = 0.0;
    if (ev < 0.0) ++unstable;
    out.curvatures.push_back(ev);
  }
  require(unstable == 0, ErrorKind::NegativeCurvature,
          std::to_string(unstable) + " unstable direction(s) at the supplied configuration");
  for (double ev : out.curvatures) out.frequencies.push_back(p.g * std::sqrt(ev));
  return out;
}

}  // namespace iccwork::oracle
