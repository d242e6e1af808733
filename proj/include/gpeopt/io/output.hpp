#pragma once

#include <json.hpp>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gpeopt/core/control.hpp"
#include "gpeopt/core/error.hpp"
#include "gpeopt/core/field.hpp"
#include "gpeopt/io/units.hpp"

namespace gpeopt {

namespace fs = std::filesystem;

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("output: cannot create directory " + dir.string() + ": " + ec.message());
}

inline std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw ConfigError("output: cannot write " + path.string());
  return out;
}

/// One number with 17 significant digits, enough to recover the double exactly.
inline std::string format_number(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

/// CSV with a header row; every row must match the header width.
inline void write_csv(const fs::path& path, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw ShapeError("csv: row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv: cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: " + path.string() + " is empty");
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) t.header.push_back(cell);
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      double v = 0.0;
      const char* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (ec != std::errc() || ptr != end) throw ConfigError("csv: " + path.string() + ":" + std::to_string(lineno) + ": not a number '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != t.header.size())
      throw ConfigError("csv: " + path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " columns");
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Columns t, lambda_1 .. lambda_m (t in ms when a unit system is given).
inline void write_control_csv(const fs::path& path, const ControlCurve& c, const UnitSystem* u = nullptr) {
  std::vector<std::string> header = {u ? "t_ms" : "t"};
  for (int j = 0; j < c.components(); ++j) header.push_back("lambda_" + std::to_string(j + 1));
  std::vector<std::vector<double>> rows;
  for (int n = 0; n <= c.steps(); ++n) {
    std::vector<double> r = {u ? u->time_to_ms(c.time(n)) : c.time(n)};
    for (int j = 0; j < c.components(); ++j) r.push_back(c(n, j));
    rows.push_back(std::move(r));
  }
  write_csv(path, header, rows);
}

/// Reads a control written by write_control_csv. The time column must be
/// uniform and start at zero.
inline ControlCurve read_control_csv(const fs::path& path, const UnitSystem* u = nullptr) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2 || t.rows.size() < 3) throw ConfigError("control csv: need a time column, one component and 3 rows");
  const int steps = static_cast<int>(t.rows.size()) - 1;
  const double last = t.rows.back()[0];
  const double horizon = u ? u->time_from_ms(last) : last;
  ControlCurve c(horizon, steps, static_cast<int>(t.header.size()) - 1);
  for (int n = 0; n <= steps; ++n) {
    const double tn = t.rows[static_cast<std::size_t>(n)][0];
    if (std::abs(tn - last * n / steps) > 1e-9 * std::abs(last)) throw ConfigError("control csv: time column is not uniform");
    for (int j = 0; j < c.components(); ++j) c(n, j) = t.rows[static_cast<std::size_t>(n)][static_cast<std::size_t>(j) + 1];
  }
  return c;
}

/// Raw payload: (re, im) pairs of little-endian doubles in grid index order,
/// plus a JSON sidecar describing shape and units. The sidecar holds no
/// timing, so repeated runs produce identical files.
struct SnapshotMeta {
  std::string kind;
  double time = 0.0;  ///< dimensionless
  UnitSystem units;
};

inline std::uint64_t to_little_endian(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  else {
    std::uint64_t y = 0;
    for (int i = 0; i < 8; ++i) y |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return y;
  }
}

inline void write_snapshot(const fs::path& stem, const ComplexField& f, const SnapshotMeta& meta) {
  const fs::path bin = fs::path(stem).replace_extension(".bin"), side = fs::path(stem).replace_extension(".json");
  {
    auto out = open_output(bin, std::ios::binary);
    std::vector<std::uint64_t> buf(2 * f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      buf[2 * i] = to_little_endian(std::bit_cast<std::uint64_t>(f.values[i].real()));
      buf[2 * i + 1] = to_little_endian(std::bit_cast<std::uint64_t>(f.values[i].imag()));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
    if (!out) throw NumericalError("output: short write to " + bin.string());
  }
  nlohmann::ordered_json j;
  j["kind"] = meta.kind;
  j["shape"] = f.grid.points();
  j["half_lengths"] = f.grid.half_lengths();
  j["index_order"] = "row-major, last axis fastest";
  j["dtype"] = "complex128 little-endian (re, im)";
  j["payload_bytes"] = 16 * f.values.size();
  j["time"] = meta.time;
  j["time_ms"] = meta.units.time_to_ms(meta.time);
  j["units"] = {{"mass_kg", meta.units.mass}, {"l0_m", meta.units.l0}, {"t0_s", meta.units.t0()}};
  open_output(side) << j.dump(2) << "\n";
}

inline ComplexField read_snapshot(const fs::path& stem) {
  const fs::path bin = fs::path(stem).replace_extension(".bin"), side = fs::path(stem).replace_extension(".json");
  std::ifstream js(side);
  if (!js) throw ConfigError("snapshot: cannot open " + side.string());
  const auto j = nlohmann::json::parse(js);
  const Grid grid(j.at("shape").get<std::vector<int>>(), j.at("half_lengths").get<std::vector<double>>());
  ComplexField f(grid);
  std::ifstream in(bin, std::ios::binary | std::ios::ate);
  if (!in) throw ConfigError("snapshot: cannot open " + bin.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != 16 * f.values.size()) throw ShapeError("snapshot: payload size does not match sidecar shape");
  in.seekg(0);
  std::vector<std::uint64_t> buf(2 * f.values.size());
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  for (std::size_t i = 0; i < f.values.size(); ++i)
    f.values[i] = {std::bit_cast<double>(to_little_endian(buf[2 * i])), std::bit_cast<double>(to_little_endian(buf[2 * i + 1]))};
  return f;
}

/// JSON with non-finite numbers written as null (plain JSON has no NaN).
inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) { open_output(path) << j.dump(2) << "\n"; }

}  // namespace gpeopt
