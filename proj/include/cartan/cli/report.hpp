#pragma once

/**
 * @file report.hpp
 * @brief Check reports and bit-stable CSV/JSON emission.
 */

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cartan/core.hpp"
#include "cartan/lie_group.hpp"

namespace cartan::cli {

using nlohmann::json;

struct CheckRow {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Report {
  std::string subcommand;
  json scenario = json::object();
  std::vector<CheckRow> checks;
  /// Values that are measured and reported but carry no pass/fail bound.
  json diagnostics = json::object();
  std::vector<std::string> coverage;
  /// Wall-clock seconds per phase. Kept out of emitted files so reports stay byte-stable.
  std::vector<std::pair<std::string, double>> timings;

  /// Adds a row; pass = (value <= tolerance), and a non-finite value fails.
  const CheckRow& check(const std::string& name, double value, double tolerance) {
    checks.push_back({name, value, tolerance, std::isfinite(value) && value <= tolerance});
    return checks.back();
  }

  bool pass() const {
    for (const auto& r : checks)
      if (!r.pass) return false;
    return true;
  }
};

namespace detail {

/// Non-finite doubles have no JSON literal; they are written as strings.
inline json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace detail

inline json to_json(const Report& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"value", detail::number(c.value)},
                      {"tolerance", detail::number(c.tolerance)},
                      {"pass", c.pass}});
  json j;
  j["subcommand"] = r.subcommand;
  j["scenario"] = r.scenario;
  j["checks"] = checks;
  j["diagnostics"] = r.diagnostics;
  if (!r.coverage.empty()) j["coverage"] = r.coverage;
  j["pass"] = r.pass();
  return j;
}

/// JSON text with sorted keys and a trailing newline.
inline std::string report_text(const Report& r) { return to_json(r).dump(2) + "\n"; }

/// Shortest text that round-trips is not required; 17 significant digits always is.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV of points and group elements: header x1[,x2[,x3]],m00,m01,... with
/// matrix entries row-major.
inline std::string matrix_csv(int dim, int ambient, const std::vector<Point>& points,
                              const std::vector<Mat>& values) {
  if (points.size() != values.size()) throw Error(ErrorKind::BadArgument, "points and values differ in length");
  std::string out;
  for (int i = 0; i < dim; ++i) out += (i ? ",x" : "x") + std::to_string(i + 1);
  for (int r = 0; r < ambient; ++r)
    for (int c = 0; c < ambient; ++c) out += ",m" + std::to_string(r) + std::to_string(c);
  out += "\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    for (int i = 0; i < dim; ++i) out += (i ? "," : "") + format_double(points[k](i));
    for (int r = 0; r < ambient; ++r)
      for (int c = 0; c < ambient; ++c) out += "," + format_double(values[k](r, c));
    out += "\n";
  }
  return out;
}

inline std::string group_csv(int dim, const LieGroupSpec& g, const std::vector<Point>& points,
                             const std::vector<GroupElement>& values) {
  std::vector<Mat> m;
  m.reserve(values.size());
  for (const auto& v : values) m.push_back(v.matrix());
  return matrix_csv(dim, g.ambient_dim(), points, m);
}

/// Generic table with a header row and numeric columns.
inline std::string table_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
    out += "\n";
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::Io, path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace cartan::cli
