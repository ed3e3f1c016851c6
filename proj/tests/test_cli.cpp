#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "iccwork/io.hpp"
#include "iccwork/oracle.hpp"
#include "json.hpp"

using namespace iccwork;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;  // stdout and stderr
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(ICCWORK_CLI) + " " + args + " 2>&1";
  Run r{0, {}};
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, "popen failed"};
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("iccwork_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

std::string dmrg_config(const std::string& sizes, double lo, double hi, int count, int d, int chi,
                        const std::string& extra = "") {
  std::ostringstream os;
  os << "[model]\nengine = dmrg\ng = 0.1\nL = " << sizes << "\n[quench]\ndelta_omega = 0.01\n"
     << "[solver]\nlocal_dim = " << d << "\nchi_max = " << chi << "\n" << extra << "[grid]\nomega_sq_start = " << lo
     << "\nomega_sq_stop = " << hi << "\ncount = " << count << "\n";
  return os.str();
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("harmonic-sweep").code, 2);  // --config is required
  const auto dir = scratch("usage");
  const auto bad = write_config(dir, "[model]\nmystery = 1\n");
  const auto r = cli("harmonic-sweep --config " + bad.string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("mystery"), std::string::npos);
  const auto wrong = write_config(dir, dmrg_config("4", 1.0, 1.1, 2, 4, 8));
  EXPECT_EQ(cli("harmonic-sweep --config " + wrong.string()).code, 2);
  EXPECT_EQ(cli("verify --jobs 0").code, 2);
}

TEST(Cli, HarmonicSweepRowsAndDeterminism) {
  const auto dir = scratch("harmonic");
  const auto cfg = write_config(dir, "[model]\nL = 60\n[grid]\nomega_sq_start = 4.3\nomega_sq_stop = 5.2\ncount = 10\n");
  ASSERT_EQ(cli("harmonic-sweep --config " + cfg.string() + " --out " + (dir / "a").string()).code, 0);
  ASSERT_EQ(cli("harmonic-sweep --config " + cfg.string() + " --out " + (dir / "b").string() + " --jobs 3").code, 0);
  const auto t = io::read_csv_file(dir / "a" / "work_statistics.csv", "work_statistics");
  EXPECT_EQ(t.rows.size(), 10u);
  for (std::size_t r = 0; r < t.rows.size(); ++r) EXPECT_EQ(t.text(r, "status"), "ok");
  EXPECT_EQ(slurp(dir / "a" / "work_statistics.csv"), slurp(dir / "b" / "work_statistics.csv"));
}

TEST(Cli, HarmonicSoftModeSlopesInSummary) {
  const auto dir = scratch("slopes");
  const double h1 = UniversalConstants::standard().h1;
  std::ostringstream cfg;
  cfg.precision(17);
  cfg << "[model]\nL = 1000\n[grid]\nspacing = log\ncount = 13\nomega_sq_start = " << h1 + 1e-3
      << "\nomega_sq_stop = " << h1 + 1e-1 << "\n";
  const auto up = write_config(dir, cfg.str());
  ASSERT_EQ(cli("harmonic-sweep --config " + up.string() + " --out " + (dir / "lin").string()).code, 0);
  const auto r = cli("analyze --out " + (dir / "an").string() + " " + (dir / "lin" / "work_statistics.csv").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(dir / "an" / "analysis.json"));
  const auto& s = j["harmonic"]["loglog_slopes"][0];
  EXPECT_EQ(s["phase"], "linear");
  EXPECT_NEAR(s["w_irr_soft"]["slope"].get<double>(), -1.5, 0.02);
  EXPECT_NEAR(s["sigma_sq_soft"]["slope"].get<double>(), -1.0, 0.02);
}

TEST(Cli, DmrgSweepMatchesExactDiagonalization) {
  const auto dir = scratch("dmrg_ed");
  const auto cfg = write_config(dir, dmrg_config("4", 0.5, 4.5, 3, 8, 64, "basis_frequency = 0.3\n"));
  const auto r = cli("dmrg-sweep --strict --config " + cfg.string() + " --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto t = io::read_csv_file(dir / "dmrg_sweep.csv", "dmrg_sweep");
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_FALSE(fs::exists(dir / "checkpoint"));
  const LocalBasisSpec basis{7, 0.3};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ModelParams p;
    p.g = 0.1;
    p.L = 4;
    p.boundary = Boundary::open;
    p.omega_sq = t.number(i, "omega_sq");
    const auto ex = oracle::exact_ground_state(p, basis);
    EXPECT_NEAR(t.number(i, "E_G"), ex.energy, 1e-7 * std::abs(ex.energy));
    EXPECT_NEAR(t.number(i, "Y2"), ex.y_sq_total, 1e-7);
    EXPECT_EQ(t.text(i, "converged"), "1");
  }
}

TEST(Cli, CheckpointResumeGivesIdenticalTable) {
  const auto dir = scratch("resume");
  const auto cfg = write_config(dir, dmrg_config("4,6", 0.6, 1.4, 5, 6, 16));
  ASSERT_EQ(cli("dmrg-sweep --config " + cfg.string() + " --out " + (dir / "full").string()).code, 0);
  const auto part = dir / "part";
  const auto first = cli("dmrg-sweep --config " + cfg.string() + " --out " + part.string() + " --stop-after 3");
  ASSERT_EQ(first.code, 0) << first.output;
  EXPECT_NE(first.output.find("resume"), std::string::npos);
  EXPECT_TRUE(fs::exists(part / "checkpoint" / "progress.csv"));
  EXPECT_FALSE(fs::exists(part / "dmrg_sweep.csv"));
  // a different config must not pick up this checkpoint
  const auto other = write_config(dir / "part", dmrg_config("4,6", 0.6, 1.4, 5, 6, 12));
  EXPECT_EQ(cli("dmrg-sweep --config " + other.string() + " --out " + part.string()).code, 2);
  ASSERT_EQ(cli("dmrg-sweep --config " + cfg.string() + " --out " + part.string() + " --stop-after 4").code, 0);
  ASSERT_EQ(cli("dmrg-sweep --config " + cfg.string() + " --out " + part.string()).code, 0);
  EXPECT_EQ(slurp(part / "dmrg_sweep.csv"), slurp(dir / "full" / "dmrg_sweep.csv"));
}

TEST(Cli, WarmStartAgreesAndSavesSweeps) {
  const auto dir = scratch("warm");
  const std::string common = "min_sweeps = 1\ntol = 1e-10\n";
  const auto warm = write_config(dir, dmrg_config("8", 0.8, 1.3, 6, 6, 16, common + "warm_start = true\n"));
  ASSERT_EQ(cli("dmrg-sweep --config " + warm.string() + " --out " + (dir / "warm").string()).code, 0);
  const auto cold = write_config(dir, dmrg_config("8", 0.8, 1.3, 6, 6, 16, common + "warm_start = false\n"));
  ASSERT_EQ(cli("dmrg-sweep --config " + cold.string() + " --out " + (dir / "cold").string()).code, 0);
  const auto a = io::read_csv_file(dir / "warm" / "dmrg_sweep.csv", "dmrg_sweep");
  const auto b = io::read_csv_file(dir / "cold" / "dmrg_sweep.csv", "dmrg_sweep");
  ASSERT_EQ(a.rows.size(), b.rows.size());
  double sweeps_warm = 0, sweeps_cold = 0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_NEAR(a.number(i, "E_G"), b.number(i, "E_G"), 10 * 1e-10);
    sweeps_warm += a.number(i, "sweeps");
    sweeps_cold += b.number(i, "sweeps");
  }
  EXPECT_LT(sweeps_warm, sweeps_cold);
}

TEST(Cli, AnalyzeRecoversSyntheticExponent) {
  const auto dir = scratch("synthetic");
  io::CsvTable t{"dmrg_sweep", 1, {"L", "g", "omega_sq", "E_G", "Y2", "w_irr", "status"}, {}};
  for (int L : {16, 24, 32, 48}) {
    const double ws = 1.0 - 2.0 / L, wmax = 1e-3 * L;
    for (int i = 0; i < 41; ++i) {
      const double x = -3.0 + 6.0 * i / 40.0 + 0.05 * std::sin(L + i);
      const double w2 = ws + x / L;  // nu = 1
      t.rows.push_back({std::to_string(L), "0.1", io::format_number(w2), "0", "1",
                        io::format_number(wmax - 1e-5 * L * std::log1p(x * x)), "ok"});
    }
  }
  io::write_csv_file(dir / "synthetic.csv", t);
  const auto r = cli("analyze --out " + dir.string() + " " + (dir / "synthetic.csv").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(dir / "analysis.json"));
  EXPECT_NEAR(j["dmrg"]["collapse"]["nu"].get<double>(), 1.0, 0.025);
  EXPECT_GT(j["dmrg"]["peak_height_fit"]["r2"].get<double>(), 0.9999);
  EXPECT_TRUE(fs::exists(dir / "peaks.csv"));
  EXPECT_TRUE(fs::exists(dir / "collapse_quality.csv"));
  EXPECT_TRUE(fs::exists(dir / "collapse_curves.csv"));
}

TEST(Cli, AnalyzeNamesMissingColumn) {
  const auto dir = scratch("missing");
  io::CsvTable t{"dmrg_sweep", 1, {"L", "g", "omega_sq", "E_G", "Y2", "status"}, {{"4", "0.1", "1", "0", "1", "ok"}}};
  io::write_csv_file(dir / "bad.csv", t);
  const auto r = cli("analyze --out " + dir.string() + " " + (dir / "bad.csv").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("w_irr"), std::string::npos);
  std::ofstream(dir / "noschema.csv") << "L,omega_sq\n4,1\n";
  EXPECT_EQ(cli("analyze --out " + dir.string() + " " + (dir / "noschema.csv").string()).code, 2);
}

TEST(Cli, VerifyPassesAndCatchesTamperedConstant) {
  const auto good = cli("verify");
  EXPECT_EQ(good.code, 0) << good.output;
  EXPECT_NE(good.output.find("all passed"), std::string::npos);
  const auto bad = cli("verify --tamper-h2 0.7");
  EXPECT_NE(bad.code, 0);
  std::istringstream lines(bad.output);
  std::string line;
  bool named = false;
  while (std::getline(lines, line))
    if (line.rfind("dispersion.linear_vs_hessian", 0) == 0) named = line.find("FAIL") != std::string::npos;
  EXPECT_TRUE(named) << bad.output;
}
