#pragma once

// Engine-vs-oracle checks run by `iccwork verify`. The engines use `VerifyOptions::constants`
// while the oracles always rebuild the standard constants, so a tampered constant shows up
// as failing checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "iccwork/dmrg.hpp"
#include "iccwork/harmonic.hpp"
#include "iccwork/oracle.hpp"

namespace iccwork {

struct VerifyCheck {
  std::string name;
  double engine_value = 0.0;
  double oracle_value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;  ///< error text when the check threw
};

struct VerifyOptions {
  UniversalConstants constants = UniversalConstants::standard();
};

namespace detail {

inline VerifyCheck compare(std::string name, double engine, double oracle, double tol) {
  const bool ok = std::isfinite(engine) && std::isfinite(oracle) && std::abs(engine - oracle) <= tol;
  return {std::move(name), engine, oracle, tol, ok, {}};
}

/// Largest |a_i - b_i| over sorted copies, reported as engine = max deviation, oracle = 0.
inline VerifyCheck compare_spectra(std::string name, std::vector<double> a, std::vector<double> b, double tol) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double dev = a.size() == b.size() ? 0.0 : kInfinity;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) dev = std::max(dev, std::abs(a[i] - b[i]));
  return {std::move(name), dev, 0.0, tol, dev <= tol, {}};
}

inline ModelParams verify_params(const UniversalConstants& c, double g, double w2, int L, Boundary b,
                                 double beta = kInfinity) {
  ModelParams p;
  p.g = g;
  p.omega_sq = w2;
  p.L = L;
  p.boundary = b;
  p.beta = beta;
  p.constants = c;
  return p;
}

}  // namespace detail

inline std::vector<VerifyCheck> run_verify(const VerifyOptions& opt = {}) {
  using detail::compare;
  using detail::verify_params;
  const UniversalConstants eng = opt.constants;
  const UniversalConstants ref = UniversalConstants::standard();
  std::vector<VerifyCheck> out;
  auto guarded = [&](const std::string& name, const std::function<void()>& f) {
    try {
      f();
    } catch (const std::exception& e) {
      out.push_back({name, std::nan(""), std::nan(""), 0.0, false, e.what()});
    }
  };

  guarded("constants.h1", [&] { out.push_back(compare("constants.h1", eng.h1, 3.5 * 1.2020569031595942854, 1e-14)); });
  guarded("constants.h2", [&] { out.push_back(compare("constants.h2", eng.h2, 0.69314718055994530942, 1e-15)); });
  guarded("constants.h3", [&] {
    out.push_back(compare("constants.h3", eng.h3, 93.0 / 8.0 * 1.0369277551433699263, 1e-13));
  });

  guarded("dispersion.linear_vs_hessian", [&] {
    const auto pe = verify_params(eng, 0.1, ref.h1 + 1.0, 8, Boundary::periodic);
    const auto po = verify_params(ref, 0.1, ref.h1 + 1.0, 8, Boundary::periodic);
    const auto modes = oracle::hessian_normal_modes(po, oracle::uniform_equilibrium(po.L));
    out.push_back(detail::compare_spectra("dispersion.linear_vs_hessian", mode_frequencies(pe), modes.frequencies, 1e-10));
  });
  guarded("dispersion.zigzag_vs_hessian", [&] {
    const auto pe = verify_params(eng, 0.1, ref.h1 - 0.5, 6, Boundary::periodic);
    const auto po = verify_params(ref, 0.1, ref.h1 - 0.5, 6, Boundary::periodic);
    const auto modes = oracle::hessian_normal_modes(po, oracle::staggered_equilibrium(po));
    out.push_back(detail::compare_spectra("dispersion.zigzag_vs_hessian", mode_frequencies(pe), modes.frequencies, 1e-10));
  });

  for (double beta : {1.0, 5.0, kInfinity}) {
    const std::string tag = std::isinf(beta) ? "inf" : std::to_string(static_cast<int>(beta));
    guarded("work.single_mode_beta_" + tag, [&] {
      const auto s = mode_work_statistics(1.0, 1.2, beta);
      const auto o = oracle::brute_force_mode_tpm(1.0, 1.2, beta);
      out.push_back(compare("work.single_mode_w_irr_beta_" + tag, s.irreversible_work, o.stats.irreversible_work, 1e-8));
      out.push_back(compare("work.single_mode_variance_beta_" + tag, *s.variance, *o.stats.variance, 1e-8));
    });
  }

  guarded("chi.single_mode_fourier", [&] {
    std::vector<double> t;
    for (double x = -20.0; x <= 20.0; x += 0.5) t.push_back(x);
    const auto e = mode_characteristic_function(1.0, 1.2, 3.0, t);
    const auto o = oracle::brute_force_mode_tpm(1.0, 1.2, 3.0);
    const auto f = oracle::fourier_of_atoms(o.work, o.probability, t);
    double sup = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) sup = std::max(sup, std::abs(e[i] - f[i]));
    out.push_back({"chi.single_mode_fourier_sup", sup, 0.0, 1e-6, sup <= 1e-6, {}});
  });

  guarded("distribution.squeezing_overlaps", [&] {
    const Eigen::MatrixXd a = squeezing_overlaps(0.7, 1.3, 30, 30);
    const Eigen::MatrixXd b = oracle::quadrature_overlaps(0.7, 1.3, 30, 30);
    const double dev = (a - b).cwiseAbs().maxCoeff();
    out.push_back({"distribution.squeezing_overlaps", dev, 0.0, 1e-12, dev <= 1e-12, {}});
  });

  guarded("distribution.jarzynski_L4_beta2", [&] {
    const auto pe = verify_params(eng, 0.5, ref.h1 + 1.0, 4, Boundary::periodic, 2.0);
    const auto po = verify_params(ref, 0.5, ref.h1 + 1.0, 4, Boundary::periodic, 2.0);
    const QuenchSpec q(pe.omega_sq, pe.omega_sq + 0.4);
    const auto d = work_distribution(pe, q, 1e-12);
    // oracle free energy from the Hessian normal modes
    double dF = 0.0;
    const auto mi = oracle::hessian_normal_modes(po, oracle::uniform_equilibrium(4)).frequencies;
    const auto mf = oracle::hessian_normal_modes(po.with_omega_sq(q.omega_sq_final()), oracle::uniform_equilibrium(4)).frequencies;
    for (std::size_t k = 0; k < mi.size(); ++k)
      dF += std::log(std::sinh(0.5 * po.beta * mf[k]) / std::sinh(0.5 * po.beta * mi[k])) / po.beta;
    const double lhs = d.exponential_average(pe.beta);
    const double rhs = std::exp(-pe.beta * dF);
    const double tol = std::max(d.tilted_truncation_error, 1e-12);
    out.push_back({"distribution.jarzynski_L4_beta2", lhs / rhs - 1.0, 0.0, tol, std::abs(lhs / rhs - 1.0) <= tol && tol <= 1e-10, {}});
  });

  guarded("distribution.crooks_L4_beta2", [&] {
    const auto p = verify_params(eng, 0.5, ref.h1 + 1.0, 4, Boundary::periodic, 2.0);
    const QuenchSpec fwd(p.omega_sq, p.omega_sq + 0.4), bwd(p.omega_sq + 0.4, p.omega_sq);
    const auto f = work_distribution(p, fwd, 1e-12);
    const auto b = work_distribution(p.with_omega_sq(fwd.omega_sq_final()), bwd, 1e-12);
    const auto c = crooks_check(f, b, p.beta, quench_work_statistics(p, fwd).free_energy_difference);
    out.push_back({"distribution.crooks_L4_beta2", c.max_deviation, 0.0, 1e-8, c.points > 0 && c.max_deviation <= 1e-8, {}});
  });

  guarded("mpo.dense_vs_assembly_L3_d6", [&] {
    const auto pe = verify_params(eng, 0.1, ref.h1 - 0.3, 3, Boundary::open);
    const auto po = verify_params(ref, 0.1, ref.h1 - 0.3, 3, Boundary::open);
    const LocalBasisSpec basis{5, 0.15};
    const Eigen::MatrixXd a = contract_dense(build_mpo(pe, basis).mpo);
    const Eigen::MatrixXd b = Eigen::MatrixXd(oracle::assemble_hamiltonian(po, basis));
    const double dev = (a - b).cwiseAbs().maxCoeff();
    out.push_back({"mpo.dense_vs_assembly_L3_d6", dev, 0.0, 1e-12, dev <= 1e-12, {}});
  });

  guarded("ed.backends_agree_L3_d8", [&] {
    const auto po = verify_params(ref, 0.1, ref.h1 + 0.5, 3, Boundary::open);
    const auto basis = default_basis(po, 8);
    const auto a = oracle::exact_diagonalize(po, basis, 1, false, oracle::EigenMethod::Dense);
    const auto b = oracle::exact_diagonalize(po, basis, 1, false, oracle::EigenMethod::Krylov);
    out.push_back(compare("ed.backends_agree_L3_d8", b.eigenvalues(0), a.eigenvalues(0), 1e-10));
  });

  guarded("dmrg.vs_ed_L4_d8", [&] {
    const auto pe = verify_params(eng, 0.1, ref.h1 + 1.0, 4, Boundary::open);
    const auto po = verify_params(ref, 0.1, ref.h1 + 1.0, 4, Boundary::open);
    const auto basis = default_basis(po, 8);
    DmrgOptions o;
    o.chi_max = 64;
    const auto gs = ground_state(pe, basis, o).result;
    const auto ex = oracle::exact_ground_state(po, basis);
    out.push_back(compare("dmrg.energy_vs_ed_L4_d8", gs.energy, ex.energy, 1e-8 * std::abs(ex.energy)));
    out.push_back(compare("dmrg.y2_vs_ed_L4_d8", gs.y_sq_total, ex.y_sq_total, 1e-7));
  });

  guarded("dmrg.w_irr_vs_ed_L4_d8", [&] {
    const auto pe = verify_params(eng, 0.1, 1.0, 4, Boundary::open);
    const auto po = verify_params(ref, 0.1, 1.0, 4, Boundary::open);
    const auto basis = default_basis(po, 8);
    const auto q = QuenchSpec::from_delta(1.0, 0.01);
    DmrgOptions o;
    o.chi_max = 64;
    const auto w = irreversible_work_t0(pe, q, basis, o);
    const auto ei = oracle::exact_ground_state(po, basis);
    const auto ef = oracle::exact_ground_state(po.with_omega_sq(q.omega_sq_final()), basis);
    out.push_back(compare("dmrg.w_irr_vs_ed_L4_d8", w.stats.irreversible_work,
                          0.5 * q.signed_delta() * ei.y_sq_total - (ef.energy - ei.energy), 1e-8));
  });

  guarded("dmrg.hellmann_feynman_L6", [&] {
    const auto pe = verify_params(eng, 0.1, 1.5, 6, Boundary::open);
    const auto basis = default_basis(pe, 10);
    DmrgOptions o;
    o.chi_max = 24;
    const double h = 1e-3;
    const auto mid = ground_state(pe, basis, o);
    const double up = ground_state(pe.with_omega_sq(pe.omega_sq + h), basis, o, &mid.state).result.energy;
    const double dn = ground_state(pe.with_omega_sq(pe.omega_sq - h), basis, o, &mid.state).result.energy;
    const double slope = (up - dn) / (2.0 * h), half = 0.5 * mid.result.y_sq_total;
    out.push_back(compare("dmrg.hellmann_feynman_L6", slope, half, 1e-5 * half));
  });

  guarded("harmonic.thermodynamic_limit", [&] {
    const auto pe = verify_params(eng, 0.1, ref.h1 + 0.5, 120, Boundary::periodic);
    const auto q = QuenchSpec::from_delta(pe.omega_sq, 0.01);
    const double sum = quench_work_statistics(pe, q).irreversible_work;
    const double integral = thermodynamic_limit_wirr(pe, q, 1e-3);
    out.push_back(compare("harmonic.thermodynamic_limit_L120", sum / pe.L, integral / pe.L, 1e-10 * std::abs(integral / pe.L) + 1e-16));
  });
  return out;
}

}  // namespace iccwork
