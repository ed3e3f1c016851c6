#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "iccwork/config.hpp"
#include "iccwork/dmrg.hpp"
#include "iccwork/io.hpp"

using namespace iccwork;
namespace fs = std::filesystem;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;  // sentinel: nothing thrown
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("iccwork_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Numbers, RoundTripIsBitExact) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 20000) {
    const double x = std::bit_cast<double>(bits(rng));
    if (!std::isfinite(x)) continue;
    const double y = io::parse_number(io::format_number(x));
    ASSERT_EQ(std::bit_cast<std::uint64_t>(x), std::bit_cast<std::uint64_t>(y)) << io::format_number(x);
    ++checked;
  }
  for (double x : {0.0, -0.0, 1.0, 0.1, 1e-300, 5e-324, 1.7976931348623157e308})
    EXPECT_EQ(std::bit_cast<std::uint64_t>(x), std::bit_cast<std::uint64_t>(io::parse_number(io::format_number(x))));
  EXPECT_TRUE(std::isinf(io::parse_number(io::format_number(kInfinity))));
  EXPECT_LT(io::parse_number("-inf"), 0.0);
  EXPECT_TRUE(std::isnan(io::parse_number(io::format_number(std::nan("")))));
  EXPECT_EQ(kind_of([] { io::parse_number("1.5x"); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([] { io::parse_number(""); }), ErrorKind::SchemaError);
}

TEST(Csv, RoundTripAndSchemaLine) {
  io::CsvTable t{"demo", 3, {"a", "b", "status"}, {{"1", "0.5", "ok"}, {"2", "", "NoConvergence"}}};
  std::stringstream ss;
  io::write_csv(ss, t);
  EXPECT_EQ(ss.str().substr(0, 19), "# iccwork demo v3\na");
  const auto r = io::read_csv(ss, "demo");
  EXPECT_EQ(r.schema, "demo");
  EXPECT_EQ(r.version, 3);
  EXPECT_EQ(r.columns, t.columns);
  EXPECT_EQ(r.rows, t.rows);
  EXPECT_DOUBLE_EQ(r.number(0, "b"), 0.5);
  EXPECT_EQ(r.text(1, "status"), "NoConvergence");
}

TEST(Csv, SchemaViolations) {
  auto read = [](const std::string& text, std::string_view schema = {}) {
    std::istringstream in(text);
    return io::read_csv(in, schema);
  };
  EXPECT_EQ(kind_of([&] { read(""); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([&] { read("a,b\n1,2\n"); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([&] { read("# iccwork x v1\na,b\n1,2\n", "y"); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([&] { read("# iccwork x v1\na,b\n1,2,3\n"); }), ErrorKind::SchemaError);
  const auto t = read("# iccwork x v1\na,b\n1,2\n");
  try {
    (void)t.column("omega_sq");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaError);
    EXPECT_NE(std::string(e.what()).find("omega_sq"), std::string::npos);
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  ModelParams p;
  p.g = 0.1;
  p.L = 5;
  p.omega_sq = 1.0;
  p.boundary = Boundary::open;
  DmrgOptions o;
  o.chi_max = 8;
  const auto basis = default_basis(p, 5);
  const auto run = ground_state(p, basis, o);
  std::stringstream ss;
  io::write_checkpoint(ss, run.state);
  const Mps back = io::read_checkpoint(ss);
  ASSERT_EQ(back.length(), run.state.length());
  EXPECT_EQ(back.local_dim(), run.state.local_dim());
  EXPECT_EQ(back.basis.basis_frequency, basis.basis_frequency);
  for (int j = 0; j < back.length(); ++j)
    for (int s = 0; s < back.local_dim(); ++s)
      EXPECT_EQ(back.sites[j].blocks[s], run.state.sites[j].blocks[s]);
  // a warm start from the reloaded state reproduces the same energy
  const auto again = ground_state(p, basis, o, &back);
  EXPECT_NEAR(again.result.energy, run.result.energy, 1e-10);

  const auto dir = scratch("ckpt");
  io::save_checkpoint(dir / "a.mps", run.state);
  EXPECT_FALSE(fs::exists(dir / "a.mps.tmp"));
  EXPECT_EQ(io::load_checkpoint(dir / "a.mps").sites[2].blocks[1], run.state.sites[2].blocks[1]);
}

TEST(Checkpoint, CorruptionIsDetected) {
  Mps m;
  m.basis = {2, 0.5};
  for (int j = 0; j < 3; ++j) {
    MpsTensor t;
    for (int s = 0; s < 3; ++s) t.blocks.push_back(Eigen::MatrixXd::Constant(1, 1, 0.25 * (j + s)));
    m.sites.push_back(t);
  }
  std::stringstream ss;
  io::write_checkpoint(ss, m);
  const std::string good = ss.str();

  std::string flipped = good;
  flipped[40] ^= 0x10;  // inside the payload
  std::istringstream a(flipped);
  EXPECT_EQ(kind_of([&] { io::read_checkpoint(a); }), ErrorKind::IoError);

  std::istringstream b(good.substr(0, good.size() - 3));
  EXPECT_EQ(kind_of([&] { io::read_checkpoint(b); }), ErrorKind::IoError);

  std::string magic = good;
  magic[0] = 'X';
  std::istringstream c(magic);
  EXPECT_EQ(kind_of([&] { io::read_checkpoint(c); }), ErrorKind::IoError);

  std::string version = good;
  version[8] = 9;
  std::istringstream d(version);
  EXPECT_EQ(kind_of([&] { io::read_checkpoint(d); }), ErrorKind::IoError);
}

TEST(Config, RoundTripIsLossless) {
  RunConfig c;
  c.engine = Engine::dmrg;
  c.g = 0.125;
  c.sizes = {16, 24, 32};
  c.beta = kInfinity;
  c.boundary = Boundary::open;
  c.delta_omega = 0.01;
  c.direction = QuenchDirection::up;
  c.grid = {0.3, 1.7, 29, GridSpacing::linear};
  c.solver.local_dim = 10;
  c.solver.chi_max = 24;
  c.solver.tol = 1e-11;
  c.solver.seed = 18446744073709551615ull;
  c.solver.warm_start = false;
  c.solver.basis_frequency = 0.3141592653589793;
  c.output_dir = "some/dir";
  c.characteristic_t_max = 12.5;
  c.distribution = true;
  const auto text = serialize_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(parse_config(serialize_config(RunConfig{})), RunConfig{});
}

TEST(Config, DefaultsAndErrors) {
  const auto h = parse_config("[model]\nL = 60\n[grid]\nomega_sq_start = 4.3\nomega_sq_stop = 5.2\ncount = 10\n");
  EXPECT_EQ(h.engine, Engine::harmonic);
  EXPECT_EQ(h.boundary, Boundary::periodic);
  EXPECT_EQ(h.direction, QuenchDirection::away);
  EXPECT_EQ(h.grid.points().size(), 10u);
  const auto d = parse_config("[model]\nengine = dmrg\nL = 8,12\n[grid]\nomega_sq_start=0.5\nomega_sq_stop=1\ncount=3\n");
  EXPECT_EQ(d.boundary, Boundary::open);
  EXPECT_EQ(d.direction, QuenchDirection::up);
  EXPECT_EQ(d.sizes, (std::vector<int>{8, 12}));

  for (const char* bad : {"[model]\nfoo = 1\n", "[nonsense]\nx = 1\n", "[model]\ng = abc\n", "[grid]\ncount = 0\n",
                          "[model]\nengine = dmrg\nboundary = periodic\n", "[solver]\nseed = -3\n",
                          "[grid]\nspacing = cubic\n", "[model]\nL = 8,x\n", "[model\n"})
    EXPECT_EQ(kind_of([&] { parse_config(bad); }), ErrorKind::ConfigError) << bad;
  EXPECT_EQ(kind_of([] { load_config("/nonexistent/iccwork.ini"); }), ErrorKind::ConfigError);
}

TEST(Config, LogGridApproachesH1) {
  const double h1 = UniversalConstants::standard().h1;
  GridSpec g{h1 + 1e-3, h1 + 1e-1, 21, GridSpacing::log};
  const auto pts = g.points();
  ASSERT_EQ(pts.size(), 21u);
  EXPECT_NEAR(pts.front() - h1, 1e-3, 1e-15);
  EXPECT_NEAR(pts.back() - h1, 1e-1, 1e-14);
  for (std::size_t i = 1; i < pts.size(); ++i)
    EXPECT_NEAR(std::log(pts[i] - h1) - std::log(pts[i - 1] - h1), std::log(100.0) / 20, 1e-9);
  GridSpec below{h1 - 1e-1, h1 - 1e-3, 5, GridSpacing::log};
  EXPECT_LT(below.points().back(), h1);
  GridSpec across{h1 - 0.1, h1 + 0.1, 5, GridSpacing::log};
  EXPECT_EQ(kind_of([&] { (void)across.points(); }), ErrorKind::ConfigError);
}
