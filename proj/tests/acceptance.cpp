// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.
// Every tolerance used below is a named constant in this file.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "iccwork/iccwork.hpp"

using namespace iccwork;
namespace fs = std::filesystem;

namespace {

const UniversalConstants C = UniversalConstants::standard();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  std::array<char, 512> buf{};
  std::snprintf(buf.data(), buf.size(), f, args...);
  return buf.data();
}

ModelParams model(double g, double w2, int L, Boundary b, double beta = kInfinity) {
  ModelParams p;
  p.g = g;
  p.omega_sq = w2;
  p.L = L;
  p.boundary = b;
  p.beta = beta;
  return p;
}

// ---------------------------------------------------------------------------
// 1. soft-mode exponents and prefactors

constexpr double kSlopeTol = 0.02;
constexpr double kPrefactorTol = 0.01;

Outcome criterion1() {
  const double g = 0.1, dw = 0.01;
  const int n = 21;
  bool ok = true;
  std::string detail;
  for (int side : {+1, -1}) {
    std::vector<double> x, w, s, ratio_w, ratio_s;
    for (int i = 0; i < n; ++i) {
      const double dist = std::pow(10.0, -3.0 + 2.0 * i / (n - 1));
      const auto p = model(g, C.h1 + side * dist, 2, Boundary::periodic);
      const auto q = QuenchSpec::from_delta(p.omega_sq, dw, side);  // away from h1
      const auto exact = soft_mode_exact(p, q);
      const auto lead = soft_mode_scaling(p, q);
      x.push_back(dist);
      w.push_back(exact.w_irr);
      s.push_back(exact.sigma_sq);
      // asymptotic window: the top half-decade, where dw / |w^2 - h1| is smallest
      if (dist >= std::pow(10.0, -1.5) - 1e-15) {
        ratio_w.push_back(exact.w_irr / lead.w_irr);
        ratio_s.push_back(exact.sigma_sq / lead.sigma_sq);
      }
    }
    const double sw = loglog_slope(x, w).slope, ss = loglog_slope(x, s).slope;
    double worst_w = 0, worst_s = 0;
    for (double r : ratio_w) worst_w = std::max(worst_w, std::abs(r - 1.0));
    for (double r : ratio_s) worst_s = std::max(worst_s, std::abs(r - 1.0));
    const bool side_ok = std::abs(sw + 1.5) <= kSlopeTol && std::abs(ss + 1.0) <= kSlopeTol &&
                         worst_w <= kPrefactorTol && worst_s <= kPrefactorTol;
    ok = ok && side_ok;
    detail += fmt("%s: slope W_soft %.4f, slope sigma2_soft %.4f, prefactor dev W %.3g, sigma2 %.3g; ",
                  side > 0 ? "linear" : "zigzag", sw, ss, worst_w, worst_s);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 2. closed form vs quadrature two-point measurement

constexpr double kClosedFormTol = 1e-8;

Outcome criterion2() {
  double worst = 0.0;
  const std::vector<std::pair<double, double>> pairs{{1.0, 1.2}, {1.0, 0.7}, {0.3, 0.36}, {2.0, 1.5}};
  for (double beta : {1.0, 5.0, kInfinity})
    for (auto [wi, wf] : pairs) {
      const auto s = mode_work_statistics(wi, wf, beta);
      const auto o = oracle::brute_force_mode_tpm(wi, wf, beta);
      worst = std::max({worst, std::abs(s.irreversible_work - o.stats.irreversible_work),
                        std::abs(*s.variance - *o.stats.variance), std::abs(s.mean_work - o.stats.mean_work)});
    }
  return {worst <= kClosedFormTol, fmt("max |closed form - TPM| = %.3g over 12 quenches", worst)};
}

// ---------------------------------------------------------------------------
// 3. Jarzynski and Crooks at L = 4, beta = 2

constexpr double kTruncationBudget = 1e-10;
constexpr double kRoundoff = 1e-12;

Outcome criterion3() {
  const double beta = 2.0, cutoff = SolverConfig{}.weight_cutoff;
  bool ok = true;
  std::string detail;
  for (double dw : {0.4, -0.4}) {
    const auto p = model(0.5, C.h1 + 1.0, 4, Boundary::periodic, beta);
    const QuenchSpec fwd(p.omega_sq, p.omega_sq + dw), bwd(p.omega_sq + dw, p.omega_sq);
    const auto f = work_distribution(p, fwd, cutoff);
    const auto b = work_distribution(p.with_omega_sq(fwd.omega_sq_final()), bwd, cutoff);
    // Z_f / Z_i from the Hessian normal modes of the oracle
    const auto mi = oracle::hessian_normal_modes(p, oracle::uniform_equilibrium(4)).frequencies;
    const auto mf =
        oracle::hessian_normal_modes(p.with_omega_sq(fwd.omega_sq_final()), oracle::uniform_equilibrium(4)).frequencies;
    double dF = 0.0;
    for (std::size_t k = 0; k < mi.size(); ++k)
      dF += std::log(std::sinh(0.5 * beta * mf[k]) / std::sinh(0.5 * beta * mi[k])) / beta;
    const double jar = std::abs(f.exponential_average(beta) / std::exp(-beta * dF) - 1.0);
    const auto cr = crooks_check(f, b, beta, dF);
    const double budget = f.tilted_truncation_error + b.truncation_error;
    const bool side_ok = f.tilted_truncation_error <= kTruncationBudget && b.truncation_error <= kTruncationBudget &&
                         jar <= f.tilted_truncation_error + kRoundoff && cr.l1_deviation <= budget + kRoundoff;
    ok = ok && side_ok;
    detail += fmt("%s: |<e^-bW>Z_i/Z_f - 1| %.3g (trunc %.3g), Crooks L1 %.3g (budget %.3g, %zu atoms); ",
                  dw > 0 ? "up" : "down", jar, f.tilted_truncation_error, cr.l1_deviation, budget,
                  f.support.size());
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 4 and 5. DMRG vs exact diagonalization, Hellmann-Feynman

constexpr double kEnergyRelTol = 1e-7;
constexpr double kY2Tol = 1e-7;
constexpr double kHellmannFeynmanRelTol = 1e-5;
constexpr double kHellmannFeynmanStep = 1e-3;

struct HfSample {
  std::string where;
  double slope;
  double half_y2;
  double rel() const { return std::abs(slope - half_y2) / std::abs(half_y2); }
};

std::vector<HfSample> hf_samples;

/// Central difference of E at w^2 +- h, each solve warm-started from the state at w^2.
void record_hellmann_feynman(const std::string& where, const ModelParams& p, const LocalBasisSpec& basis,
                             DmrgOptions opt, const GroundStateRun& mid) {
  if (!mid.result.converged) return;
  opt.min_sweeps = 1;
  const double h = kHellmannFeynmanStep;
  const auto up = ground_state(p.with_omega_sq(p.omega_sq + h), basis, opt, &mid.state).result;
  const auto dn = ground_state(p.with_omega_sq(p.omega_sq - h), basis, opt, &mid.state).result;
  hf_samples.push_back({where, (up.energy - dn.energy) / (2.0 * h), 0.5 * mid.result.y_sq_total});
}

const std::vector<double> kOracleGrid{1.0, 2.5, 3.7, 4.0, 4.5, 5.5};

Outcome criterion4() {
  double worst_e = 0.0, worst_y = 0.0;
  int points = 0;
  bool all_converged = true;
  for (auto [L, d] : std::vector<std::pair<int, int>>{{3, 8}, {4, 8}, {5, 6}}) {
    for (double w2 : kOracleGrid) {
      const auto p = model(0.1, w2, L, Boundary::open);
      const auto basis = default_basis(p, d);
      DmrgOptions opt;
      opt.chi_max = 256;
      opt.energy_tol = 1e-12;
      const auto run = ground_state(p, basis, opt);
      const auto ex = oracle::exact_ground_state(p, basis);
      worst_e = std::max(worst_e, std::abs(run.result.energy - ex.energy) / std::abs(ex.energy));
      worst_y = std::max(worst_y, std::abs(run.result.y_sq_total - ex.y_sq_total));
      all_converged = all_converged && run.result.converged;
      ++points;
      record_hellmann_feynman(fmt("L=%d d=%d w2=%.2f", L, d, w2), p, basis, opt, run);
    }
  }
  return {worst_e <= kEnergyRelTol && worst_y <= kY2Tol && all_converged,
          fmt("%d points, max rel energy error %.3g, max |dY2| %.3g%s", points, worst_e, worst_y,
              all_converged ? "" : ", some runs not converged")};
}

Outcome criterion5() {
  double worst = 0.0;
  std::string where;
  for (const auto& s : hf_samples)
    if (s.rel() >= worst) {
      worst = s.rel();
      where = s.where;
    }
  return {!hf_samples.empty() && worst <= kHellmannFeynmanRelTol,
          fmt("%zu converged points (h = %.0e), max rel |dE/dw2 - Y2/2| %.3g at %s", hf_samples.size(),
              kHellmannFeynmanStep, worst, where.c_str())};
}

// ---------------------------------------------------------------------------
// 6 and 7. finite-size peaks and collapse

constexpr double kPeakLinearR2 = 0.995;
constexpr double kNuTarget = 1.0;
constexpr double kNuTol = 0.1;

struct PeakRun {
  SweepTable table;
  std::map<int, PeakEstimate> peaks;
  std::vector<std::string> errors;
  int unconverged = 0;
};

const std::vector<int> kSizes{16, 24, 32, 48};
constexpr double kGridLo = 0.60, kGridHi = 1.10;
constexpr int kGridCount = 26;
// energy variance is extensive, so the convergence bound grows with the chain
constexpr double kVariancePerSite = 1e-9;

PeakRun run_peaks() {
  PeakRun out;
  const double g = 0.1, dw = 0.01;
  const auto grid = linear_grid(kGridLo, kGridHi, kGridCount);
  io::CsvTable csv{"dmrg_sweep", 1, {"L", "g", "omega_sq", "E_G", "Y2", "chi", "energy_variance", "sweeps", "w_irr",
                                     "status"}, {}};
  for (int L : kSizes) {
    const auto p0 = model(g, grid.front(), L, Boundary::open);
    const auto basis = default_basis(p0, 10);
    DmrgOptions opt;
    opt.chi_max = 24;
    opt.max_sweeps = 10;
    opt.variance_bound = kVariancePerSite * L;
    std::optional<Mps> warm;
    for (double w2 : grid) {
      const auto p = model(g, w2, L, Boundary::open);
      const auto q = QuenchSpec::from_delta(w2, dw);
      auto gi = ground_state(p, basis, opt, warm ? &*warm : nullptr);
      const auto gf = ground_state(p.with_omega_sq(q.omega_sq_final()), basis, opt, &gi.state);
      const double w = average_work_from_ground(gi.result, q) - (gf.result.energy - gi.result.energy);
      const bool conv = gi.result.converged && gf.result.converged;
      if (!conv) ++out.unconverged;
      record_hellmann_feynman(fmt("L=%d w2=%.3f", L, w2), p, basis, opt, gi);
      csv.rows.push_back({std::to_string(L), io::format_number(g), io::format_number(w2),
                          io::format_number(gi.result.energy), io::format_number(gi.result.y_sq_total),
                          std::to_string(gi.result.bond_dimension), io::format_number(gi.result.energy_variance),
                          std::to_string(gi.result.sweeps), io::format_number(w), conv ? "ok" : "NoConvergence"});
      ScalingRow r;
      r.L = L;
      r.g = g;
      r.omega_sq = w2;
      r.w_irr = w;
      r.energy = gi.result.energy;
      r.y_sq_total = gi.result.y_sq_total;
      r.source = Source::dmrg;
      out.table.rows.push_back(r);
      warm = std::move(gi.state);
    }
    try {
      out.peaks[L] = find_peak(out.table, L, Source::dmrg);
    } catch (const Error& e) {
      out.errors.push_back(fmt("L=%d: %s", L, e.what()));
    }
  }
  io::write_csv_file("acceptance_dmrg_sweep.csv", csv);
  return out;
}

Outcome criterion6(const PeakRun& run) {
  if (!run.errors.empty()) {
    std::string e;
    for (const auto& s : run.errors) e += s + "; ";
    return {false, "no interior peak: " + e};
  }
  std::vector<double> Ls, heights;
  std::string detail;
  bool monotone = true;
  double prev = -kInfinity;
  for (const auto& [L, pk] : run.peaks) {
    Ls.push_back(L);
    heights.push_back(pk.w_irr_max);
    detail += fmt("L=%d: w*2 %.4f +- %.1e, W_max %.4e; ", L, pk.omega_star_sq, pk.uncertainty, pk.w_irr_max);
    monotone = monotone && pk.omega_star_sq > prev;
    prev = pk.omega_star_sq;
  }
  const auto fit = linear_fit(Ls, heights);
  detail += fmt("height fit slope %.4e intercept %.4e R2 %.5f; w*2 monotone: %s; unconverged points %d",
                fit.slope, fit.intercept, fit.r2, monotone ? "yes" : "no", run.unconverged);
  return {fit.r2 >= kPeakLinearR2 && monotone && run.peaks.size() == kSizes.size(), detail};
}

Outcome criterion7(const PeakRun& run) {
  const auto grid = linear_grid(0.5, 2.0, 31);
  const double step = grid[1] - grid[0];
  // synthetic recovery: W = W_max(L) - L a ln(1 + x^2), x = L^{1/nu} (w^2 - w*^2)
  bool synthetic_ok = true;
  std::string detail = "synthetic:";
  for (double nu : {0.5, 1.0, 2.0}) {
    SweepTable t;
    std::map<int, PeakEstimate> peaks;
    for (int L : kSizes) {
      const double ws = 1.0 - 2.0 / L, wmax = 1e-3 * L, s = std::pow(static_cast<double>(L), 1.0 / nu);
      peaks[L] = {ws, wmax, 5, 0.0};
      for (int i = 0; i < 41; ++i) {
        const double x = -3.0 + 6.0 * i / 40.0 + 0.05 * std::sin(L + i);
        ScalingRow r;
        r.L = L;
        r.g = 0.1;
        r.omega_sq = ws + x / s;
        r.w_irr = wmax - 1e-4 * L * std::log1p(x * x);
        t.rows.push_back(r);
      }
    }
    const auto res = collapse(t, peaks, grid);
    synthetic_ok = synthetic_ok && std::abs(res.nu - nu) <= 0.5 * step;
    detail += fmt(" %.1f->%.3f", nu, res.nu);
  }
  if (run.peaks.size() != kSizes.size()) return {false, detail + "; no DMRG peaks for every size"};
  try {
    const auto res = collapse(run.table, run.peaks, grid);
    std::ofstream prof("acceptance_collapse_quality.csv");
    prof << "# iccwork collapse_quality v1\nnu,quality\n";
    for (const auto& [n, q] : res.profile) prof << io::format_number(n) << ',' << io::format_number(q) << '\n';
    const bool ok = synthetic_ok && std::abs(res.nu - kNuTarget) <= kNuTol;
    return {ok, detail + fmt("; DMRG collapse nu = %.3f (linearized ordinate %.3f)", res.nu, res.nu_linearized)};
  } catch (const Error& e) {
    return {false, detail + "; collapse failed: " + e.what()};
  }
}

// ---------------------------------------------------------------------------
// 8. logarithmic divergence of W_IRR / L

constexpr double kLogR2 = 0.999;

Outcome criterion8() {
  const double g = 0.1, dw = 0.01;
  std::vector<double> x, y;
  for (int i = 0; i <= 20; ++i) {
    const double dist = std::pow(10.0, -6.0 + 2.0 * i / 20.0);
    const auto p = model(g, C.h1 + dist, 1, Boundary::periodic);
    const auto q = QuenchSpec::from_delta(p.omega_sq, dw);
    x.push_back(std::log(dist));
    y.push_back(thermodynamic_limit_wirr(p, q, 1e-3));  // per site for L = 1
  }
  const auto fit = linear_fit(x, y);
  return {fit.r2 >= kLogR2, fmt("w2 - h1 in [1e-6, 1e-4], dw = %.2g: W/L = %.4e ln(w2-h1) + %.4e, R2 %.6f", dw,
                                fit.slope, fit.intercept, fit.r2)};
}

// ---------------------------------------------------------------------------
// 9. verify gate and byte-identical harmonic sweeps

constexpr double kVerifyBudgetSeconds = 300.0;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  const int verify_rc = std::system((std::string(ICCWORK_CLI) + " verify > acceptance_verify.txt 2>&1").c_str());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto dir = fs::path("acceptance_harmonic");
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.ini") << "[model]\nL = 60,90,144\nbeta = inf\n[quench]\ndelta_omega = 0.01\n"
                                    "[grid]\nomega_sq_start = 3.2\nomega_sq_stop = 5.2\ncount = 41\n"
                                    "[output]\ncharacteristic_t_max = 20\ncharacteristic_count = 41\n";
  const std::string base = std::string(ICCWORK_CLI) + " harmonic-sweep --config " + (dir / "run.ini").string();
  const int a = std::system((base + " --out " + (dir / "a").string() + " > /dev/null 2>&1").c_str());
  const int b = std::system((base + " --jobs 4 --out " + (dir / "b").string() + " > /dev/null 2>&1").c_str());
  const auto ta = slurp(dir / "a" / "work_statistics.csv"), tb = slurp(dir / "b" / "work_statistics.csv");
  const bool identical = a == 0 && b == 0 && !ta.empty() && ta == tb &&
                         slurp(dir / "a" / "chi" / "L90_50.csv") == slurp(dir / "b" / "chi" / "L90_50.csv");
  return {verify_rc == 0 && secs <= kVerifyBudgetSeconds && identical,
          fmt("verify exit %d in %.1f s; harmonic-sweep reruns byte-identical: %s (%zu bytes)", verify_rc, secs,
              identical ? "yes" : "no", ta.size())};
}

}  // namespace

int main(int argc, char** argv) {
  // optional arguments select criteria, e.g. `acceptance 2 3`
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto selected = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };
  int failures = 0;
  auto report = [&](int n, const std::function<Outcome()>& f) {
    if (!selected(n)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s  [%.1f s]  %s\n", n, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  report(1, criterion1);
  report(2, criterion2);
  report(3, criterion3);
  report(4, criterion4);
  PeakRun peaks;
  if (selected(5) || selected(6) || selected(7)) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      peaks = run_peaks();
    } catch (const std::exception& e) {
      peaks.errors.push_back(std::string("sweep threw: ") + e.what());
    }
    std::printf("(criterion 6/7 DMRG sweeps: %.1f s)\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  report(5, criterion5);
  report(6, [&] { return criterion6(peaks); });
  report(7, [&] { return criterion7(peaks); });
  report(8, criterion8);
  report(9, criterion9);
  std::printf("%d of %zu criteria failed\n", failures, only.empty() ? std::size_t{9} : only.size());
  return failures == 0 ? 0 : 1;
}
