#pragma once

// CSV tables with a schema line, round-trip number formatting and the binary MPS checkpoint.
//
// CSV layout:
//   # iccwork <schema> v<version>
//   col_a,col_b,...
//   rows...
//
// MPS checkpoint layout (little endian):
//   char[8]  "ICCWMPS\0"
//   u32      version (1)
//   u32      L
//   u32      d
//   u32      reserved (0)
//   f64      basis_frequency
//   per site: u64 dl, u64 dr, then d blocks of dl*dr f64, each block row-major
//   u64      payload checksum (sum of the raw 64-bit words, wrapping)

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "iccwork/errors.hpp"
#include "iccwork/mps.hpp"

namespace iccwork::io {

/// Shortest text that is still 17 significant digits; "inf", "-inf", "nan" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), r.ptr);
}

inline double parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  require(r.ec == std::errc{} && r.ptr == s.data() + s.size(), ErrorKind::SchemaError,
          "not a number: '" + std::string(s) + "'");
  return v;
}

struct CsvTable {
  std::string schema;
  int version = 1;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    fail(ErrorKind::SchemaError, "missing column '" + std::string(name) + "' in " + schema + " table");
  }
  bool has_column(std::string_view name) const {
    for (const auto& c : columns)
      if (c == name) return true;
    return false;
  }
  double number(std::size_t row, std::string_view name) const { return parse_number(rows.at(row).at(column(name))); }
  const std::string& text(std::size_t row, std::string_view name) const { return rows.at(row).at(column(name)); }
  void require_columns(const std::vector<std::string>& names) const {
    for (const auto& n : names) (void)column(n);
  }
};

inline void write_csv(std::ostream& os, const CsvTable& t) {
  os << "# iccwork " << t.schema << " v" << t.version << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    require(r.size() == t.columns.size(), ErrorKind::InvalidArgument, "row width differs from header");
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Reads a table; `expected_schema` (if nonempty) must match the schema line.
inline CsvTable read_csv(std::istream& is, std::string_view expected_schema = {}) {
  CsvTable t;
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::SchemaError, "empty CSV input");
  {
    std::istringstream head(line);
    std::string hash, tag, version;
    head >> hash >> tag >> t.schema >> version;
    require(hash == "#" && tag == "iccwork" && !t.schema.empty() && version.size() >= 2 && version[0] == 'v',
            ErrorKind::SchemaError, "missing schema line '# iccwork <schema> v<version>'");
    t.version = static_cast<int>(parse_number(std::string_view(version).substr(1)));
  }
  require(expected_schema.empty() || t.schema == expected_schema, ErrorKind::SchemaError,
          "expected a " + std::string(expected_schema) + " table, got " + t.schema);
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::SchemaError, "missing column header line");
  t.columns = split_line(line);
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    require(cells.size() == t.columns.size(), ErrorKind::SchemaError,
            "row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) + " cells, header has " +
                std::to_string(t.columns.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline CsvTable read_csv_file(const std::filesystem::path& path, std::string_view expected_schema = {}) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
  return read_csv(in, expected_schema);
}

inline void write_csv_file(const std::filesystem::path& path, const CsvTable& t) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  write_csv(out, t);
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// MPS checkpoint

namespace detail {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

inline constexpr char kMagic[8] = {'I', 'C', 'C', 'W', 'M', 'P', 'S', '\0'};
inline constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(is), ErrorKind::IoError, "truncated checkpoint");
  return v;
}

inline std::uint64_t word(double x) { return std::bit_cast<std::uint64_t>(x); }

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Mps& mps) {
  os.write(detail::kMagic, sizeof detail::kMagic);
  detail::put<std::uint32_t>(os, detail::kVersion);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(mps.length()));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(mps.local_dim()));
  detail::put<std::uint32_t>(os, 0);
  detail::put<double>(os, mps.basis.basis_frequency);
  std::uint64_t sum = 0;
  for (const auto& t : mps.sites) {
    require(t.d() == mps.local_dim(), ErrorKind::InvalidArgument, "site with wrong local dimension");
    detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(t.dl()));
    detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(t.dr()));
    for (const auto& b : t.blocks)
      for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
          detail::put<double>(os, b(i, j));
          sum += detail::word(b(i, j));
        }
  }
  detail::put<std::uint64_t>(os, sum);
}

inline Mps read_checkpoint(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof magic);
  require(static_cast<bool>(is) && std::memcmp(magic, detail::kMagic, sizeof magic) == 0, ErrorKind::IoError,
          "not an MPS checkpoint");
  const auto version = detail::get<std::uint32_t>(is);
  require(version == detail::kVersion, ErrorKind::IoError, "unsupported checkpoint version " + std::to_string(version));
  const auto L = detail::get<std::uint32_t>(is);
  const auto d = detail::get<std::uint32_t>(is);
  (void)detail::get<std::uint32_t>(is);
  require(L >= 1 && d >= 2, ErrorKind::IoError, "corrupt checkpoint header");
  Mps mps;
  mps.basis.n_max = static_cast<int>(d) - 1;
  mps.basis.basis_frequency = detail::get<double>(is);
  std::uint64_t sum = 0;
  for (std::uint32_t j = 0; j < L; ++j) {
    const auto dl = detail::get<std::uint64_t>(is);
    const auto dr = detail::get<std::uint64_t>(is);
    require(dl >= 1 && dr >= 1 && dl <= 100000 && dr <= 100000, ErrorKind::IoError, "corrupt tensor shape");
    MpsTensor t;
    for (std::uint32_t s = 0; s < d; ++s) {
      Eigen::MatrixXd b(static_cast<Eigen::Index>(dl), static_cast<Eigen::Index>(dr));
      for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index k = 0; k < b.cols(); ++k) {
          b(i, k) = detail::get<double>(is);
          sum += detail::word(b(i, k));
        }
      t.blocks.push_back(std::move(b));
    }
    mps.sites.push_back(std::move(t));
  }
  require(detail::get<std::uint64_t>(is) == sum, ErrorKind::IoError, "checkpoint checksum mismatch");
  return mps;
}

inline void save_checkpoint(const std::filesystem::path& path, const Mps& mps) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::IoError, "cannot write " + tmp.string());
    write_checkpoint(out, mps);
    require(static_cast<bool>(out), ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Mps load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace iccwork::io
