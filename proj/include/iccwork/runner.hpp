#pragma once

// Sweep drivers behind the command-line tool: harmonic and DMRG parameter sweeps, resumable
// DMRG runs, and the analysis of sweep tables.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "iccwork/config.hpp"
#include "iccwork/dmrg.hpp"
#include "iccwork/harmonic.hpp"
#include "iccwork/io.hpp"
#include "iccwork/scaling.hpp"

namespace iccwork {

/// Runs f(i) for i in [0, n) on up to `jobs` threads. Results must be written by index.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex m;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline QuenchSpec make_quench(double omega_sq, double delta_omega, QuenchDirection dir,
                              const UniversalConstants& c = UniversalConstants::standard()) {
  int sign = +1;
  if (dir == QuenchDirection::down) sign = -1;
  if (dir == QuenchDirection::away) sign = omega_sq < c.h1 ? -1 : +1;
  return QuenchSpec::from_delta(omega_sq, delta_omega, sign);
}

inline std::string error_status(const Error& e) { return std::string(to_string(e.kind())); }

// ---------------------------------------------------------------------------
// Harmonic sweep

inline const std::vector<std::string>& work_statistics_columns() {
  static const std::vector<std::string> cols{"L",        "g",        "beta",          "omega_sq_i",
                                             "omega_sq_f", "mean_work", "delta_F",     "w_irr",
                                             "sigma_sq", "w_irr_soft", "sigma_sq_soft", "status"};
  return cols;
}

struct SweepReport {
  io::CsvTable table;
  int failures = 0;
  int completed = 0;  ///< points finished in this invocation
  bool finished = true;
  std::vector<std::string> warnings;
};

struct HarmonicPoint {
  ModelParams params;
  QuenchSpec quench{0.0, 0.0};
};

inline std::vector<HarmonicPoint> harmonic_points(const RunConfig& cfg) {
  std::vector<HarmonicPoint> pts;
  for (int L : cfg.sizes)
    for (double w2 : cfg.grid.points()) {
      ModelParams p;
      p.g = cfg.g;
      p.L = L;
      p.beta = cfg.beta;
      p.boundary = cfg.boundary;
      p.omega_sq = w2;
      pts.push_back({p, make_quench(w2, cfg.delta_omega, cfg.direction)});
    }
  return pts;
}

/// Work statistics per (L, w^2). Characteristic functions and distributions go to `out_dir`
/// (subdirectories chi/ and dist/) when the config asks for them.
inline SweepReport harmonic_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir, int jobs = 1) {
  cfg.validate();
  const auto pts = harmonic_points(cfg);
  std::vector<std::vector<std::string>> rows(pts.size());
  std::vector<std::string> warn(pts.size());
  const bool want_chi = cfg.characteristic_t_max > 0.0;
  if (want_chi) std::filesystem::create_directories(out_dir / "chi");
  if (cfg.distribution) std::filesystem::create_directories(out_dir / "dist");
  parallel_for(pts.size(), jobs, [&](std::size_t i) {
    using io::format_number;
    const auto& [p, q] = pts[i];
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double mean = nan, df = nan, wirr = nan, var = nan, wsoft = nan, ssoft = nan;
    std::string status = "ok";
    try {
      const auto s = quench_work_statistics(p, q);
      mean = s.mean_work;
      df = s.free_energy_difference;
      wirr = s.irreversible_work;
      var = *s.variance;
      if (p.zero_temperature() && !q.identity()) {
        const auto soft = soft_mode_scaling(p, q);
        wsoft = soft.w_irr;
        ssoft = soft.sigma_sq;
      }
      const std::string stem = "L" + std::to_string(p.L) + "_" + std::to_string(i);
      if (want_chi) {
        const auto t = linear_grid(0.0, cfg.characteristic_t_max, cfg.characteristic_count);
        const auto chi = characteristic_function(p, q, t);
        io::CsvTable c{"characteristic_function", 1, {"t", "re_chi", "im_chi"}, {}};
        for (std::size_t k = 0; k < t.size(); ++k)
          c.rows.push_back({format_number(t[k]), format_number(chi[k].real()), format_number(chi[k].imag())});
        io::write_csv_file(out_dir / "chi" / (stem + ".csv"), c);
      }
      if (cfg.distribution) {
        const auto d = work_distribution(p, q, cfg.solver.weight_cutoff);
        io::CsvTable c{"work_distribution", 1, {"W", "p"}, {}};
        for (std::size_t k = 0; k < d.support.size(); ++k)
          c.rows.push_back({format_number(d.support[k]), format_number(d.weights[k])});
        io::write_csv_file(out_dir / "dist" / (stem + ".csv"), c);
        nlohmann::ordered_json side{{"L", p.L},
                                    {"omega_sq_i", q.omega_sq_initial()},
                                    {"omega_sq_f", q.omega_sq_final()},
                                    {"truncation_error", d.truncation_error},
                                    {"tilted_truncation_error", d.tilted_truncation_error},
                                    {"atoms", d.support.size()}};
        io::write_text_file(out_dir / "dist" / (stem + ".json"), side.dump(2) + "\n");
      }
    } catch (const Error& e) {
      status = error_status(e);
      warn[i] = "L=" + std::to_string(p.L) + " omega_sq=" + format_number(p.omega_sq) + ": " + e.what();
    }
    rows[i] = {std::to_string(p.L),
               format_number(p.g),
               format_number(p.beta),
               format_number(q.omega_sq_initial()),
               format_number(q.omega_sq_final()),
               format_number(mean),
               format_number(df),
               format_number(wirr),
               format_number(var),
               format_number(wsoft),
               format_number(ssoft),
               status};
  });
  SweepReport rep;
  rep.table = {"work_statistics", 1, work_statistics_columns(), std::move(rows)};
  for (auto& w : warn)
    if (!w.empty()) {
      ++rep.failures;
      rep.warnings.push_back(std::move(w));
    }
  rep.completed = static_cast<int>(pts.size());
  return rep;
}

// ---------------------------------------------------------------------------
// DMRG quench sweep

inline const std::vector<std::string>& dmrg_sweep_columns() {
  static const std::vector<std::string> cols{
      "L",     "g",      "omega_sq",   "E_G",    "Y2",   "chi",        "d",           "energy_variance",
      "sweeps", "converged", "omega_sq_f", "E_G_f", "w_irr", "w_irr_error", "status"};
  return cols;
}

/// Ground states at w^2 and at w^2 + signed delta for one grid point.
struct QuenchPoint {
  ModelParams params;
  QuenchSpec quench{0.0, 0.0};
  std::optional<GroundStateResult> initial;
  std::optional<GroundStateResult> final_;
  double w_irr = std::numeric_limits<double>::quiet_NaN();
  double w_irr_error = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

inline DmrgOptions dmrg_options(const SolverConfig& s) {
  DmrgOptions o;
  o.chi_max = s.chi_max;
  o.energy_tol = s.tol;
  o.variance_bound = s.variance_bound;
  o.sv_cutoff = s.sv_cutoff;
  o.min_sweeps = s.min_sweeps;
  o.max_sweeps = s.max_sweeps;
  o.pinning = s.pinning;
  o.seed = s.seed;
  return o;
}

/// Basis shared by every point of one size: the configured frequency, or the default at the lowest w^2.
inline LocalBasisSpec dmrg_basis(const RunConfig& cfg) {
  if (cfg.solver.basis_frequency > 0.0) return {cfg.solver.local_dim - 1, cfg.solver.basis_frequency};
  const auto pts = cfg.grid.points();
  ModelParams p;
  p.g = cfg.g;
  p.omega_sq = *std::min_element(pts.begin(), pts.end());
  return default_basis(p, cfg.solver.local_dim);
}

/// One grid point. `warm` (if any) seeds the initial ground state; on return it holds the
/// initial ground state for the next point (or is reset after a failure).
inline QuenchPoint solve_quench_point(const ModelParams& p, const QuenchSpec& q, const LocalBasisSpec& basis,
                                      const DmrgOptions& opt, std::optional<Mps>& warm, bool warm_start) {
  QuenchPoint pt;
  pt.params = p;
  pt.quench = q;
  try {
    auto gi = ground_state(p, basis, opt, warm_start && warm ? &*warm : nullptr);
    auto gf = ground_state(p.with_omega_sq(q.omega_sq_final()), basis, opt, &gi.state);
    pt.w_irr = average_work_from_ground(gi.result, q) - (gf.result.energy - gi.result.energy);
    pt.w_irr_error = energy_error_bound(gi.result, opt) + energy_error_bound(gf.result, opt);
    if (!gi.result.converged || !gf.result.converged) pt.status = "NoConvergence";
    pt.initial = std::move(gi.result);
    pt.final_ = std::move(gf.result);
    warm = std::move(gi.state);
  } catch (const Error& e) {
    pt.status = error_status(e);
    warm.reset();
  }
  return pt;
}

inline std::vector<std::string> dmrg_row(const QuenchPoint& pt) {
  using io::format_number;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto& a = pt.initial;
  const auto& b = pt.final_;
  return {std::to_string(pt.params.L),
          format_number(pt.params.g),
          format_number(pt.params.omega_sq),
          format_number(a ? a->energy : nan),
          format_number(a ? a->y_sq_total : nan),
          std::to_string(a ? a->bond_dimension : 0),
          std::to_string(a ? a->basis.dim() : 0),
          format_number(a ? a->energy_variance : nan),
          std::to_string(a ? a->sweeps : 0),
          (a && b && a->converged && b->converged) ? "1" : "0",
          format_number(pt.quench.omega_sq_final()),
          format_number(b ? b->energy : nan),
          format_number(pt.w_irr),
          format_number(pt.w_irr_error),
          pt.status};
}

struct DmrgRunOptions {
  int jobs = 1;
  std::optional<int> stop_after;  ///< stop (resumably) after this many newly computed points
  std::function<void(const QuenchPoint&)> on_point;
};

/// Resumable sweep. Progress lives in out_dir/checkpoint: the config it belongs to, finished
/// rows and the last MPS of every size. Sizes run concurrently; each size is sequential.
inline SweepReport dmrg_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir,
                              const DmrgRunOptions& run = {}) {
  cfg.validate();
  require(cfg.engine == Engine::dmrg, ErrorKind::ConfigError, "dmrg_sweep needs engine = dmrg");
  namespace fs = std::filesystem;
  const fs::path ck = out_dir / "checkpoint";
  const std::string cfg_text = serialize_config(cfg);
  const auto grid = cfg.grid.points();
  const auto basis = dmrg_basis(cfg);
  const auto opt = dmrg_options(cfg.solver);
  const std::size_t nL = cfg.sizes.size(), nw = grid.size();

  std::vector<std::vector<std::string>> rows(nL * nw);
  std::vector<std::size_t> done(nL, 0);
  std::vector<std::optional<Mps>> warm(nL);
  // resume
  if (fs::exists(ck / "config.ini")) {
    std::ifstream in(ck / "config.ini");
    std::stringstream ss;
    ss << in.rdbuf();
    require(ss.str() == cfg_text, ErrorKind::ConfigError,
            "checkpoint in " + ck.string() + " belongs to a different config; remove it to start over");
    if (fs::exists(ck / "progress.csv")) {
      const auto t = io::read_csv_file(ck / "progress.csv", "dmrg_sweep");
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int L = static_cast<int>(t.number(r, "L"));
        const double w2 = t.number(r, "omega_sq");
        const auto li = static_cast<std::size_t>(std::find(cfg.sizes.begin(), cfg.sizes.end(), L) - cfg.sizes.begin());
        const auto wi = static_cast<std::size_t>(std::find(grid.begin(), grid.end(), w2) - grid.begin());
        require(li < nL && wi < nw, ErrorKind::IoError, "checkpoint row outside the configured grid");
        rows[li * nw + wi] = t.rows[r];
        done[li] = std::max(done[li], wi + 1);
      }
    }
    for (std::size_t li = 0; li < nL; ++li) {
      const auto f = ck / ("L" + std::to_string(cfg.sizes[li]) + ".mps");
      if (done[li] > 0 && fs::exists(f)) warm[li] = io::load_checkpoint(f);
    }
  } else {
    fs::create_directories(ck);
    io::write_text_file(ck / "config.ini", cfg_text);
  }

  std::mutex m;
  std::atomic<int> computed{0};
  std::atomic<bool> stop{false};
  auto flush_progress = [&] {
    io::CsvTable t{"dmrg_sweep", 1, dmrg_sweep_columns(), {}};
    for (const auto& r : rows)
      if (!r.empty()) t.rows.push_back(r);
    const auto tmp = ck / "progress.csv.tmp";
    io::write_csv_file(tmp, t);
    fs::rename(tmp, ck / "progress.csv");
  };
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(nL, run.jobs, [&](std::size_t li) {
    for (std::size_t wi = done[li]; wi < nw; ++wi) {
      if (stop) return;
      ModelParams p;
      p.g = cfg.g;
      p.L = cfg.sizes[li];
      p.beta = kInfinity;
      p.boundary = cfg.boundary;
      p.omega_sq = grid[wi];
      const auto q = make_quench(grid[wi], cfg.delta_omega, cfg.direction);
      const auto pt = solve_quench_point(p, q, basis, opt, warm[li], cfg.solver.warm_start);
      std::lock_guard lock(m);
      rows[li * nw + wi] = dmrg_row(pt);
      if (warm[li]) io::save_checkpoint(ck / ("L" + std::to_string(p.L) + ".mps"), *warm[li]);
      else fs::remove(ck / ("L" + std::to_string(p.L) + ".mps"));
      flush_progress();
      if (run.on_point) run.on_point(pt);
      ++computed;
      if (run.stop_after && computed >= *run.stop_after) stop = true;
    }
  });
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  SweepReport rep;
  rep.completed = computed;
  rep.table = {"dmrg_sweep", 1, dmrg_sweep_columns(), {}};
  for (auto& r : rows)
    if (!r.empty()) rep.table.rows.push_back(r);
  rep.finished = rep.table.rows.size() == nL * nw;
  const std::size_t status_col = rep.table.column("status");
  for (const auto& r : rep.table.rows)
    if (r[status_col] != "ok") {
      ++rep.failures;
      rep.warnings.push_back("L=" + r[0] + " omega_sq=" + r[2] + ": " + r[status_col]);
    }
  if (!rep.finished) return rep;

  nlohmann::ordered_json manifest{
      {"schema", "dmrg_sweep"},
      {"config", cfg_text},
      {"solver",
       {{"chi_max", opt.chi_max},
        {"energy_tol", opt.energy_tol},
        {"variance_bound", opt.variance_bound},
        {"sv_cutoff", opt.sv_cutoff},
        {"min_sweeps", opt.min_sweeps},
        {"max_sweeps", opt.max_sweeps},
        {"pinning", opt.pinning},
        {"local_dim", basis.dim()},
        {"basis_frequency", basis.basis_frequency},
        {"davidson_krylov_dim", opt.lanczos.krylov_dim},
        {"davidson_residual_tol", opt.lanczos.residual_tol}}},
      {"seed", opt.seed},
      {"warm_start", cfg.solver.warm_start},
      {"points", rep.table.rows.size()},
      {"failures", rep.failures},
      {"wall_time_seconds_last_invocation", wall}};
  io::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  fs::remove_all(ck);
  return rep;
}

// ---------------------------------------------------------------------------
// Analysis of sweep tables

/// Builds the scaling table from a work_statistics (harmonic) or dmrg_sweep table; rows whose
/// status is not "ok" are skipped.
inline SweepTable scaling_table(const io::CsvTable& t) {
  SweepTable out;
  if (t.schema == "work_statistics") {
    t.require_columns({"L", "g", "omega_sq_i", "w_irr", "status"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (t.text(r, "status") != "ok") continue;
      ScalingRow row;
      row.L = static_cast<int>(t.number(r, "L"));
      row.g = t.number(r, "g");
      row.omega_sq = t.number(r, "omega_sq_i");
      row.w_irr = t.number(r, "w_irr");
      row.source = Source::harmonic;
      out.rows.push_back(row);
    }
  } else if (t.schema == "dmrg_sweep") {
    t.require_columns({"L", "g", "omega_sq", "w_irr", "E_G", "Y2", "status"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (t.text(r, "status") != "ok") continue;
      ScalingRow row;
      row.L = static_cast<int>(t.number(r, "L"));
      row.g = t.number(r, "g");
      row.omega_sq = t.number(r, "omega_sq");
      row.w_irr = t.number(r, "w_irr");
      row.energy = t.number(r, "E_G");
      row.y_sq_total = t.number(r, "Y2");
      row.source = Source::dmrg;
      out.rows.push_back(row);
    }
  } else {
    fail(ErrorKind::SchemaError, "cannot analyze a " + t.schema + " table");
  }
  out.validate();
  return out;
}

struct AnalysisOptions {
  std::vector<double> nu_grid = linear_grid(0.5, 2.0, 31);
};

/// Peaks, extrapolation and collapse for DMRG curves; soft-mode slopes for harmonic tables.
/// Writes analysis.json plus peaks.csv, collapse_quality.csv and collapse_curves.csv when available.
inline nlohmann::ordered_json analyze(const std::vector<io::CsvTable>& inputs, const std::filesystem::path& out_dir,
                                      const AnalysisOptions& opt = {}) {
  using io::format_number;
  nlohmann::ordered_json summary;
  const auto c = UniversalConstants::standard();
  SweepTable merged;  // DMRG rows of every input, analysed together
  for (const auto& t : inputs) {
    const auto table = scaling_table(t);
    if (t.schema == "work_statistics") {
      t.require_columns({"w_irr_soft", "sigma_sq_soft"});
      nlohmann::ordered_json slopes = nlohmann::ordered_json::array();
      std::map<std::pair<int, int>, std::vector<std::size_t>> groups;  // (L, side) -> rows
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.text(r, "status") != "ok") continue;
        const double d = t.number(r, "omega_sq_i") - c.h1;
        if (d == 0.0 || !std::isfinite(t.number(r, "w_irr_soft"))) continue;
        groups[{static_cast<int>(t.number(r, "L")), d > 0.0 ? 1 : -1}].push_back(r);
      }
      for (const auto& [key, idx] : groups) {
        if (idx.size() < 4) continue;
        std::vector<double> x, ws, ss, wf;
        for (auto r : idx) {
          x.push_back(std::abs(t.number(r, "omega_sq_i") - c.h1));
          ws.push_back(t.number(r, "w_irr_soft"));
          ss.push_back(t.number(r, "sigma_sq_soft"));
          wf.push_back(t.number(r, "w_irr"));
        }
        nlohmann::ordered_json e{{"L", key.first}, {"phase", key.second > 0 ? "linear" : "zigzag"}};
        auto put = [&](const char* name, const std::vector<double>& y) {
          try {
            const auto f = loglog_slope(x, y);
            e[name] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
          } catch (const Error& err) {
            e[name] = {{"error", err.what()}};
          }
        };
        put("w_irr_soft", ws);
        put("sigma_sq_soft", ss);
        put("w_irr", wf);
        slopes.push_back(e);
      }
      for (auto& e : slopes) summary["harmonic"]["loglog_slopes"].push_back(std::move(e));
      continue;
    }
    merged.rows.insert(merged.rows.end(), table.rows.begin(), table.rows.end());
  }
  if (!merged.rows.empty()) {
    merged.validate();
    const SweepTable& table = merged;
    nlohmann::ordered_json dm;
    std::map<int, PeakEstimate> peaks;
    io::CsvTable peak_csv{"peaks", 1, {"L", "omega_star_sq", "w_irr_max", "stencil", "uncertainty"}, {}};
    nlohmann::ordered_json peak_errors = nlohmann::ordered_json::object();
    for (int L : table.sizes(Source::dmrg)) {
      try {
        const auto pk = find_peak(table, L);
        peaks[L] = pk;
        peak_csv.rows.push_back({std::to_string(L), format_number(pk.omega_star_sq), format_number(pk.w_irr_max),
                                 std::to_string(pk.stencil), format_number(pk.uncertainty)});
      } catch (const Error& e) {
        peak_errors[std::to_string(L)] = e.what();
      }
    }
    io::write_csv_file(out_dir / "peaks.csv", peak_csv);
    dm["peak_errors"] = peak_errors;
    if (peaks.size() >= 2) {
      std::vector<double> Ls, hs;
      for (const auto& [L, pk] : peaks) {
        Ls.push_back(L);
        hs.push_back(pk.w_irr_max);
      }
      const auto f = linear_fit(Ls, hs);
      dm["peak_height_fit"] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
    }
    if (peaks.size() >= 3) {
      try {
        const auto ex = extrapolate_critical(peaks, table.rows.front().g);
        auto fit_json = [](const PowerLawFit& f) {
          return nlohmann::ordered_json{{"p", f.p}, {"omega_c_sq", f.omega_c_sq}, {"c", f.c}, {"rss", f.rss}, {"aic", f.aic}};
        };
        dm["extrapolation"] = {{"fit_p1", fit_json(ex.fit_p1)},
                               {"fit_p2", fit_json(ex.fit_p2)},
                               {"selected_p", ex.selected_p},
                               {"omega_c_sq", ex.omega_c_sq},
                               {"small_g_estimate", ex.estimate ? nlohmann::ordered_json(*ex.estimate) : nlohmann::ordered_json()},
                               {"below_h1", ex.below_h1}};
      } catch (const Error& e) {
        dm["extrapolation"] = {{"error", e.what()}};
      }
      try {
        const auto col = collapse(table, peaks, opt.nu_grid);
        io::CsvTable q{"collapse_quality", 1, {"nu", "quality"}, {}};
        for (const auto& [nu, qq] : col.profile) q.rows.push_back({format_number(nu), format_number(qq)});
        io::write_csv_file(out_dir / "collapse_quality.csv", q);
        io::CsvTable cv{"collapse_curves", 1, {"L", "x_rescaled", "y_rescaled"}, {}};
        for (const auto& pt : col.rescaled)
          cv.rows.push_back({std::to_string(pt.L), format_number(pt.x), format_number(pt.y)});
        io::write_csv_file(out_dir / "collapse_curves.csv", cv);
        dm["collapse"] = {{"nu", col.nu},
                          {"quality", col.quality},
                          {"nu_linearized", col.nu_linearized},
                          {"ordinates_agree", col.ordinates_agree}};
      } catch (const Error& e) {
        dm["collapse"] = {{"error", e.what()}};
      }
    }
    summary["dmrg"] = dm;
  }
  io::write_text_file(out_dir / "analysis.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace iccwork
