#pragma once

// Run configuration: an INI file with sections [model], [quench], [solver], [grid], [output].
//
//   [model]   engine = harmonic | dmrg, g, L = 16,24,32, beta = inf | <number>, boundary = periodic | open
//   [quench]  delta_omega, direction = up | down | away   (away: away from h1, i.e. within the initial phase)
//   [solver]  local_dim, chi_max, tol, pinning, variance_bound, sv_cutoff, min_sweeps, max_sweeps,
//             warm_start, basis_frequency (0 = automatic), seed, weight_cutoff
//   [grid]    omega_sq_start, omega_sq_stop, count, spacing = linear | log
//             (log: |w^2 - h1| log-spaced between the two ends, which must lie on the same side of h1)
//   [output]  directory, characteristic_t_max, characteristic_count, distribution = true | false

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "iccwork/errors.hpp"
#include "iccwork/io.hpp"
#include "iccwork/model.hpp"

namespace iccwork {

enum class Engine { harmonic, dmrg };
enum class GridSpacing { linear, log };
enum class QuenchDirection { up, down, away };

constexpr std::string_view to_string(Engine e) noexcept { return e == Engine::harmonic ? "harmonic" : "dmrg"; }
constexpr std::string_view to_string(GridSpacing s) noexcept { return s == GridSpacing::linear ? "linear" : "log"; }
constexpr std::string_view to_string(QuenchDirection d) noexcept {
  return d == QuenchDirection::up ? "up" : d == QuenchDirection::down ? "down" : "away";
}

struct GridSpec {
  double start = 4.3;
  double stop = 5.2;
  int count = 10;
  GridSpacing spacing = GridSpacing::linear;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

  std::vector<double> points(const UniversalConstants& c = UniversalConstants::standard()) const {
    require(count >= 1, ErrorKind::ConfigError, "grid count must be >= 1");
    require(std::isfinite(start) && std::isfinite(stop), ErrorKind::ConfigError, "grid ends must be finite");
    std::vector<double> out;
    if (count == 1) return {start};
    if (spacing == GridSpacing::linear) {
      for (int i = 0; i < count; ++i) out.push_back(start + (stop - start) * i / static_cast<double>(count - 1));
      return out;
    }
    const double a = start - c.h1, b = stop - c.h1;
    require(a != 0.0 && b != 0.0 && (a > 0.0) == (b > 0.0), ErrorKind::ConfigError,
            "log grid ends must lie strictly on the same side of h1");
    const double sign = a > 0.0 ? 1.0 : -1.0;
    const double la = std::log(std::abs(a)), lb = std::log(std::abs(b));
    for (int i = 0; i < count; ++i) out.push_back(c.h1 + sign * std::exp(la + (lb - la) * i / static_cast<double>(count - 1)));
    return out;
  }
};

struct SolverConfig {
  int local_dim = 12;
  int chi_max = 32;
  double tol = 1e-10;
  double pinning = 0.0;
  double variance_bound = 1e-8;
  double sv_cutoff = 1e-10;
  int min_sweeps = 2;
  int max_sweeps = 40;
  bool warm_start = true;
  double basis_frequency = 0.0;  ///< 0 selects the default for the grid
  std::uint64_t seed = 20240611;
  double weight_cutoff = 1e-12;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct RunConfig {
  Engine engine = Engine::harmonic;
  double g = 0.1;
  std::vector<int> sizes{60};
  double beta = kInfinity;
  Boundary boundary = Boundary::periodic;
  double delta_omega = 0.01;
  QuenchDirection direction = QuenchDirection::away;
  GridSpec grid;
  SolverConfig solver;
  std::string output_dir = "out";
  double characteristic_t_max = 0.0;  ///< 0 disables the characteristic-function output
  int characteristic_count = 201;
  bool distribution = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  void validate() const {
    require(std::isfinite(g) && g > 0.0, ErrorKind::ConfigError, "[model] g must be > 0");
    require(!sizes.empty(), ErrorKind::ConfigError, "[model] L must list at least one size");
    for (int L : sizes) require(L >= 1, ErrorKind::ConfigError, "[model] L entries must be >= 1");
    require(beta > 0.0, ErrorKind::ConfigError, "[model] beta must be > 0 or inf");
    require(std::isfinite(delta_omega) && delta_omega >= 0.0, ErrorKind::ConfigError,
            "[quench] delta_omega must be >= 0");
    require(grid.count >= 1, ErrorKind::ConfigError, "[grid] count must be >= 1");
    (void)grid.points();
    require(solver.local_dim >= 2, ErrorKind::ConfigError, "[solver] local_dim must be >= 2");
    require(solver.chi_max >= 2, ErrorKind::ConfigError, "[solver] chi_max must be >= 2");
    require(solver.tol > 0.0, ErrorKind::ConfigError, "[solver] tol must be > 0");
    require(solver.variance_bound > 0.0, ErrorKind::ConfigError, "[solver] variance_bound must be > 0");
    require(solver.min_sweeps >= 1 && solver.max_sweeps >= solver.min_sweeps, ErrorKind::ConfigError,
            "[solver] need 1 <= min_sweeps <= max_sweeps");
    require(solver.basis_frequency >= 0.0, ErrorKind::ConfigError, "[solver] basis_frequency must be >= 0");
    require(solver.weight_cutoff > 0.0 && solver.weight_cutoff < 1.0, ErrorKind::ConfigError,
            "[solver] weight_cutoff must lie in (0, 1)");
    require(characteristic_t_max >= 0.0 && characteristic_count >= 2, ErrorKind::ConfigError,
            "[output] characteristic_t_max >= 0 and characteristic_count >= 2 required");
    require(!output_dir.empty(), ErrorKind::ConfigError, "[output] directory must not be empty");
    if (engine == Engine::dmrg)
      require(boundary == Boundary::open, ErrorKind::ConfigError, "the dmrg engine needs boundary = open");
  }
};

namespace detail {

inline std::string config_text(const boost::property_tree::ptree& pt, const std::string& key, const std::string& fallback) {
  return pt.get<std::string>(key, fallback);
}

inline double config_number(const boost::property_tree::ptree& pt, const std::string& key, double fallback) {
  const auto v = pt.get_optional<std::string>(key);
  if (!v) return fallback;
  try {
    return io::parse_number(*v);
  } catch (const Error&) {
    fail(ErrorKind::ConfigError, "key " + key + ": not a number: '" + *v + "'");
  }
}

inline long long config_integer(const boost::property_tree::ptree& pt, const std::string& key, long long fallback) {
  const double v = config_number(pt, key, static_cast<double>(fallback));
  require(std::isfinite(v) && v == std::floor(v), ErrorKind::ConfigError, "key " + key + " must be an integer");
  return static_cast<long long>(v);
}

inline bool config_bool(const boost::property_tree::ptree& pt, const std::string& key, bool fallback) {
  const auto v = pt.get_optional<std::string>(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  fail(ErrorKind::ConfigError, "key " + key + " must be true or false");
}

inline void check_keys(const boost::property_tree::ptree& pt) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> known{
      {"model", {"engine", "g", "L", "beta", "boundary"}},
      {"quench", {"delta_omega", "direction"}},
      {"solver",
       {"local_dim", "chi_max", "tol", "pinning", "variance_bound", "sv_cutoff", "min_sweeps", "max_sweeps",
        "warm_start", "basis_frequency", "seed", "weight_cutoff"}},
      {"grid", {"omega_sq_start", "omega_sq_stop", "count", "spacing"}},
      {"output", {"directory", "characteristic_t_max", "characteristic_count", "distribution"}},
  };
  for (const auto& [section, body] : pt) {
    const auto it = std::find_if(known.begin(), known.end(), [&](const auto& k) { return k.first == section; });
    require(it != known.end(), ErrorKind::ConfigError, "unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      (void)value;
      require(std::find(it->second.begin(), it->second.end(), key) != it->second.end(), ErrorKind::ConfigError,
              "unknown key '" + key + "' in [" + section + "]");
    }
  }
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorKind::ConfigError, std::string("malformed config: ") + e.what());
  }
  detail::check_keys(pt);
  RunConfig c;
  const auto engine = detail::config_text(pt, "model.engine", "harmonic");
  if (engine == "harmonic") c.engine = Engine::harmonic;
  else if (engine == "dmrg") c.engine = Engine::dmrg;
  else fail(ErrorKind::ConfigError, "[model] engine must be harmonic or dmrg");
  c.g = detail::config_number(pt, "model.g", c.g);
  if (const auto sizes = pt.get_optional<std::string>("model.L")) {
    c.sizes.clear();
    std::stringstream ss(*sizes);
    std::string item;
    while (std::getline(ss, item, ',')) {
      boost::property_tree::ptree one;
      one.put("v", item);
      c.sizes.push_back(static_cast<int>(detail::config_integer(one, "v", 0)));
    }
  }
  c.beta = detail::config_number(pt, "model.beta", c.beta);
  c.boundary = Boundary::periodic;
  if (c.engine == Engine::dmrg) c.boundary = Boundary::open;
  if (const auto b = pt.get_optional<std::string>("model.boundary")) {
    try {
      c.boundary = parse_boundary(*b);
    } catch (const Error& e) {
      fail(ErrorKind::ConfigError, e.what());
    }
  }
  c.delta_omega = detail::config_number(pt, "quench.delta_omega", c.delta_omega);
  c.direction = c.engine == Engine::dmrg ? QuenchDirection::up : QuenchDirection::away;
  if (const auto d = pt.get_optional<std::string>("quench.direction")) {
    if (*d == "up") c.direction = QuenchDirection::up;
    else if (*d == "down") c.direction = QuenchDirection::down;
    else if (*d == "away") c.direction = QuenchDirection::away;
    else fail(ErrorKind::ConfigError, "[quench] direction must be up, down or away");
  }
  auto& s = c.solver;
  s.local_dim = static_cast<int>(detail::config_integer(pt, "solver.local_dim", s.local_dim));
  s.chi_max = static_cast<int>(detail::config_integer(pt, "solver.chi_max", s.chi_max));
  s.tol = detail::config_number(pt, "solver.tol", s.tol);
  s.pinning = detail::config_number(pt, "solver.pinning", s.pinning);
  s.variance_bound = detail::config_number(pt, "solver.variance_bound", s.variance_bound);
  s.sv_cutoff = detail::config_number(pt, "solver.sv_cutoff", s.sv_cutoff);
  s.min_sweeps = static_cast<int>(detail::config_integer(pt, "solver.min_sweeps", s.min_sweeps));
  s.max_sweeps = static_cast<int>(detail::config_integer(pt, "solver.max_sweeps", s.max_sweeps));
  s.warm_start = detail::config_bool(pt, "solver.warm_start", s.warm_start);
  s.basis_frequency = detail::config_number(pt, "solver.basis_frequency", s.basis_frequency);
  if (const auto seed = pt.get_optional<std::string>("solver.seed")) {
    try {
      std::size_t pos = 0;
      require(!seed->empty() && std::isdigit(static_cast<unsigned char>(seed->front())), ErrorKind::ConfigError, "");
      s.seed = std::stoull(*seed, &pos);
      require(pos == seed->size(), ErrorKind::ConfigError, "");
    } catch (const std::exception&) {
      fail(ErrorKind::ConfigError, "[solver] seed must be an unsigned integer");
    }
  }
  s.weight_cutoff = detail::config_number(pt, "solver.weight_cutoff", s.weight_cutoff);
  c.grid.start = detail::config_number(pt, "grid.omega_sq_start", c.grid.start);
  c.grid.stop = detail::config_number(pt, "grid.omega_sq_stop", c.grid.stop);
  c.grid.count = static_cast<int>(detail::config_integer(pt, "grid.count", c.grid.count));
  const auto spacing = detail::config_text(pt, "grid.spacing", "linear");
  if (spacing == "linear") c.grid.spacing = GridSpacing::linear;
  else if (spacing == "log") c.grid.spacing = GridSpacing::log;
  else fail(ErrorKind::ConfigError, "[grid] spacing must be linear or log");
  c.output_dir = detail::config_text(pt, "output.directory", c.output_dir);
  c.characteristic_t_max = detail::config_number(pt, "output.characteristic_t_max", c.characteristic_t_max);
  c.characteristic_count =
      static_cast<int>(detail::config_integer(pt, "output.characteristic_count", c.characteristic_count));
  c.distribution = detail::config_bool(pt, "output.distribution", c.distribution);
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::ConfigError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Full config text; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  using io::format_number;
  std::ostringstream os;
  std::string sizes;
  for (std::size_t i = 0; i < c.sizes.size(); ++i) sizes += (i ? "," : "") + std::to_string(c.sizes[i]);
  os << "[model]\n"
     << "engine = " << to_string(c.engine) << '\n'
     << "g = " << format_number(c.g) << '\n'
     << "L = " << sizes << '\n'
     << "beta = " << format_number(c.beta) << '\n'
     << "boundary = " << to_string(c.boundary) << "\n\n"
     << "[quench]\n"
     << "delta_omega = " << format_number(c.delta_omega) << '\n'
     << "direction = " << to_string(c.direction) << "\n\n"
     << "[solver]\n"
     << "local_dim = " << c.solver.local_dim << '\n'
     << "chi_max = " << c.solver.chi_max << '\n'
     << "tol = " << format_number(c.solver.tol) << '\n'
     << "pinning = " << format_number(c.solver.pinning) << '\n'
     << "variance_bound = " << format_number(c.solver.variance_bound) << '\n'
     << "sv_cutoff = " << format_number(c.solver.sv_cutoff) << '\n'
     << "min_sweeps = " << c.solver.min_sweeps << '\n'
     << "max_sweeps = " << c.solver.max_sweeps << '\n'
     << "warm_start = " << (c.solver.warm_start ? "true" : "false") << '\n'
     << "basis_frequency = " << format_number(c.solver.basis_frequency) << '\n'
     << "seed = " << c.solver.seed << '\n'
     << "weight_cutoff = " << format_number(c.solver.weight_cutoff) << "\n\n"
     << "[grid]\n"
     << "omega_sq_start = " << format_number(c.grid.start) << '\n'
     << "omega_sq_stop = " << format_number(c.grid.stop) << '\n'
     << "count = " << c.grid.count << '\n'
     << "spacing = " << to_string(c.grid.spacing) << "\n\n"
     << "[output]\n"
     << "directory = " << c.output_dir << '\n'
     << "characteristic_t_max = " << format_number(c.characteristic_t_max) << '\n'
     << "characteristic_count = " << c.characteristic_count << '\n'
     << "distribution = " << (c.distribution ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace iccwork
