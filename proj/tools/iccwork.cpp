#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iccwork/config.hpp"
#include "iccwork/io.hpp"
#include "iccwork/runner.hpp"
#include "iccwork/verify.hpp"

namespace fs = std::filesystem;
using namespace iccwork;

namespace {

constexpr int kOk = 0;
constexpr int kNumeric = 1;
constexpr int kUsage = 2;

struct Common {
  std::string config;
  std::string out;
  bool strict = false;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

RunConfig load(const Common& c) {
  RunConfig cfg = load_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed) cfg.solver.seed = *c.seed;
  cfg.validate();
  return cfg;
}

int finish(const SweepReport& rep, bool strict) {
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  return rep.failures > 0 && strict ? kNumeric : kOk;
}

int run_harmonic(const Common& c) {
  const auto cfg = load(c);
  require(cfg.engine == Engine::harmonic, ErrorKind::ConfigError, "harmonic-sweep needs engine = harmonic");
  fs::create_directories(cfg.output_dir);
  const auto rep = harmonic_sweep(cfg, cfg.output_dir, c.jobs);
  io::write_csv_file(fs::path(cfg.output_dir) / "work_statistics.csv", rep.table);
  std::cout << rep.table.rows.size() << " rows -> " << (fs::path(cfg.output_dir) / "work_statistics.csv").string()
            << '\n';
  return finish(rep, c.strict);
}

int run_dmrg(const Common& c, std::optional<int> stop_after) {
  const auto cfg = load(c);
  fs::create_directories(cfg.output_dir);
  DmrgRunOptions run;
  run.jobs = c.jobs;
  run.stop_after = stop_after;
  run.on_point = [](const QuenchPoint& pt) {
    std::cerr << "L=" << pt.params.L << " omega_sq=" << io::format_number(pt.params.omega_sq)
              << " E=" << io::format_number(pt.initial ? pt.initial->energy : std::nan("")) << " w_irr=" << io::format_number(pt.w_irr) << ' '
              << pt.status << '\n';
  };
  const auto rep = dmrg_sweep(cfg, cfg.output_dir, run);
  if (!rep.finished) {
    std::cout << "stopped after " << rep.completed << " points; rerun to resume\n";
    return kOk;
  }
  const auto path = fs::path(cfg.output_dir) / "dmrg_sweep.csv";
  io::write_csv_file(path, rep.table);
  std::cout << rep.table.rows.size() << " rows -> " << path.string() << '\n';
  return finish(rep, c.strict);
}

int run_analyze(const Common& c, const std::vector<std::string>& inputs) {
  std::string out = c.out;
  if (out.empty()) out = c.config.empty() ? "analysis" : load_config(c.config).output_dir;
  std::vector<io::CsvTable> tables;
  for (const auto& in : inputs) tables.push_back(io::read_csv_file(in));
  fs::create_directories(out);
  const auto summary = analyze(tables, out);
  std::cout << summary.dump(2) << '\n';
  return kOk;
}

int run_verify(std::optional<double> tamper_h2) {
  VerifyOptions opt;
  if (tamper_h2) opt.constants.h2 = *tamper_h2;
  const auto t0 = std::chrono::steady_clock::now();
  const auto checks = run_verify(opt);
  bool ok = true;
  std::printf("%-42s %24s %24s %10s  %s\n", "check", "engine", "oracle", "tolerance", "status");
  for (const auto& ch : checks) {
    std::printf("%-42s %24s %24s %10.1e  %s\n", ch.name.c_str(), io::format_number(ch.engine_value).c_str(),
                io::format_number(ch.oracle_value).c_str(), ch.tolerance, ch.pass ? "PASS" : "FAIL");
    if (!ch.note.empty()) std::printf("    %s\n", ch.note.c_str());
    ok = ok && ch.pass;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%zu checks, %s, %.1f s\n", checks.size(), ok ? "all passed" : "FAILURES", secs);
  return ok ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Work statistics for quenches across the linear-zigzag transition"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&](CLI::App* s, bool need_config) {
    auto* opt = s->add_option("--config", c.config, "config file (INI)");
    if (need_config) opt->required()->check(CLI::ExistingFile);
    s->add_option("--out", c.out, "output directory (overrides [output] dir)");
    s->add_flag("--strict", c.strict, "exit 1 if any point failed");
    s->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
    s->add_option("--seed", c.seed, "seed for the initial MPS");
  };
  auto* hs = app.add_subcommand("harmonic-sweep", "analytic work statistics over an omega^2 grid");
  add_common(hs, true);
  auto* ds = app.add_subcommand("dmrg-sweep", "DMRG ground states and W_IRR over an omega^2 grid");
  add_common(ds, true);
  std::optional<int> stop_after;
  ds->add_option("--stop-after", stop_after, "stop after this many points (testing)")->group("");
  auto* an = app.add_subcommand("analyze", "peaks, extrapolation, collapse and slopes from sweep tables");
  add_common(an, false);
  std::vector<std::string> inputs;
  an->add_option("inputs", inputs, "sweep CSV files")->required()->check(CLI::ExistingFile);
  auto* vf = app.add_subcommand("verify", "engine vs oracle checks");
  std::optional<double> tamper_h2;
  vf->add_option("--tamper-h2", tamper_h2, "replace h2 in the engines (fault injection)")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  try {
    if (*hs) return run_harmonic(c);
    if (*ds) return run_dmrg(c, stop_after);
    if (*an) return run_analyze(c, inputs);
    return run_verify(tamper_h2);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::ConfigError:
      case ErrorKind::SchemaError:
      case ErrorKind::IoError:
      case ErrorKind::InvalidArgument:
        return kUsage;
      default:
        return kNumeric;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
