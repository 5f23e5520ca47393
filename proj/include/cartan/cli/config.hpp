#pragma once

/**
 * @file config.hpp
 * @brief Scenario files: one JSON document per scenario.
 *
 *   {
 *     "group": "so3",
 *     "form": "pullback-expxy:L1,L2",
 *     "form2": "su2-zcc:0.8,1.1",               optional
 *     "functions": ["quad:L1,L2,L3", ...],      optional, up to 3
 *     "curves": ["trig:L1,L2,L3", ...],         optional, up to 2
 *     "grid": {"resolution": [33, 33], "half_widths": [1, 1]},
 *     "evol": {"integrator": "rkmk4", "steps": 256, "dexpinv_order": 4},
 *     "tolerances": {"round_trip": 1e-6},
 *     "seed": 7,
 *     "path": [[0, 0], [0.5, 0], [0.5, 0.5]],  optional
 *     "epsilons": [0.2, 0.1, 0.05, 0.025],     optional
 *     "output": {"dir": "out", "formats": ["csv", "json"]}
 *   }
 */

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cartan/core.hpp"
#include "cartan/integrator.hpp"

namespace cartan::cli {

using nlohmann::json;

struct GridConfig {
  std::vector<int> resolution{9, 9};
  std::vector<double> half_widths{1.0, 1.0};
  bool operator==(const GridConfig&) const = default;
};

struct EvolSettings {
  std::string integrator = "rkmk4";
  int steps = 256;
  int dexpinv_order = 4;
  bool operator==(const EvolSettings&) const = default;

  EvolConfig to_config() const { return {parse_integrator(integrator), steps, dexpinv_order}; }
};

struct OutputConfig {
  std::string dir = "out";
  std::vector<std::string> formats{"csv", "json"};
  bool operator==(const OutputConfig&) const = default;

  bool wants(const std::string& f) const {
    for (const auto& x : formats)
      if (x == f) return true;
    return false;
  }
};

struct ScenarioConfig {
  std::string group;
  std::string form;
  std::optional<std::string> form2;
  std::vector<std::string> functions;
  std::vector<std::string> curves;
  GridConfig grid;
  EvolSettings evol;
  std::map<std::string, double> tolerances;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> path;
  std::vector<double> epsilons;
  OutputConfig output;

  bool operator==(const ScenarioConfig&) const = default;

  int dim() const { return static_cast<int>(grid.resolution.size()); }
};

namespace detail {

inline void require_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorKind::Config, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw Error(ErrorKind::Config, "unknown key '" + k + "' in " + where);
}

}  // namespace detail

/// Structural checks beyond the JSON schema.
inline void validate(const ScenarioConfig& c) {
  if (c.group.empty()) throw Error(ErrorKind::Config, "missing 'group'");
  if (c.form.empty()) throw Error(ErrorKind::Config, "missing 'form'");
  const auto d = c.grid.resolution.size();
  if (d < 1 || d > kMaxDim) throw Error(ErrorKind::Config, "grid dimension must be 1..3");
  if (c.grid.half_widths.size() != d)
    throw Error(ErrorKind::Config, "grid.half_widths must have one entry per axis");
  for (int r : c.grid.resolution)
    if (r < 2) throw Error(ErrorKind::Config, "grid resolution must be >= 2");
  for (double w : c.grid.half_widths)
    if (!(w > 0.0)) throw Error(ErrorKind::Config, "grid half widths must be positive");
  try {
    c.evol.to_config().validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  for (const auto& [k, v] : c.tolerances)
    if (!(v > 0.0)) throw Error(ErrorKind::Config, "tolerance '" + k + "' must be positive");
  if (c.functions.size() > 3) throw Error(ErrorKind::Config, "at most three functions");
  if (c.curves.size() > 2) throw Error(ErrorKind::Config, "at most two curves");
  for (const auto& p : c.path)
    if (p.size() != d) throw Error(ErrorKind::Config, "path points must match the grid dimension");
  if (!c.path.empty() && c.path.size() < 2) throw Error(ErrorKind::Config, "path needs at least two points");
  for (double e : c.epsilons)
    if (!(e > 0.0)) throw Error(ErrorKind::Config, "epsilons must be positive");
  for (const auto& f : c.output.formats)
    if (f != "csv" && f != "json") throw Error(ErrorKind::Config, "unknown output format '" + f + "'");
}

inline ScenarioConfig parse_config(const json& j) {
  ScenarioConfig c;
  try {
    detail::require_keys(j, "scenario",
                         {"group", "form", "form2", "functions", "curves", "grid", "evol", "tolerances", "seed",
                          "path", "epsilons", "output"});
    if (!j.contains("group")) throw Error(ErrorKind::Config, "missing 'group'");
    if (!j.contains("form")) throw Error(ErrorKind::Config, "missing 'form'");
    c.group = j.at("group").get<std::string>();
    c.form = j.at("form").get<std::string>();
    if (j.contains("form2")) c.form2 = j.at("form2").get<std::string>();
    if (j.contains("functions")) c.functions = j.at("functions").get<std::vector<std::string>>();
    if (j.contains("curves")) c.curves = j.at("curves").get<std::vector<std::string>>();
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      detail::require_keys(g, "grid", {"resolution", "half_widths"});
      if (g.contains("resolution")) c.grid.resolution = g.at("resolution").get<std::vector<int>>();
      if (g.contains("half_widths")) c.grid.half_widths = g.at("half_widths").get<std::vector<double>>();
    }
    if (j.contains("evol")) {
      const json& e = j.at("evol");
      detail::require_keys(e, "evol", {"integrator", "steps", "dexpinv_order"});
      if (e.contains("integrator")) c.evol.integrator = e.at("integrator").get<std::string>();
      if (e.contains("steps")) c.evol.steps = e.at("steps").get<int>();
      if (e.contains("dexpinv_order")) c.evol.dexpinv_order = e.at("dexpinv_order").get<int>();
    }
    if (j.contains("tolerances")) c.tolerances = j.at("tolerances").get<std::map<std::string, double>>();
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw Error(ErrorKind::Config, "seed must be a non-negative integer");
      c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("path")) c.path = j.at("path").get<std::vector<std::vector<double>>>();
    if (j.contains("epsilons")) c.epsilons = j.at("epsilons").get<std::vector<double>>();
    if (j.contains("output")) {
      const json& o = j.at("output");
      detail::require_keys(o, "output", {"dir", "formats"});
      if (o.contains("dir")) c.output.dir = o.at("dir").get<std::string>();
      if (o.contains("formats")) c.output.formats = o.at("formats").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  validate(c);
  return c;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return parse_config(j);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
}

inline json to_json(const ScenarioConfig& c) {
  json j;
  j["group"] = c.group;
  j["form"] = c.form;
  if (c.form2) j["form2"] = *c.form2;
  if (!c.functions.empty()) j["functions"] = c.functions;
  if (!c.curves.empty()) j["curves"] = c.curves;
  j["grid"] = {{"resolution", c.grid.resolution}, {"half_widths", c.grid.half_widths}};
  j["evol"] = {{"integrator", c.evol.integrator}, {"steps", c.evol.steps}, {"dexpinv_order", c.evol.dexpinv_order}};
  j["tolerances"] = c.tolerances;
  j["seed"] = c.seed;
  if (!c.path.empty()) j["path"] = c.path;
  if (!c.epsilons.empty()) j["epsilons"] = c.epsilons;
  j["output"] = {{"dir", c.output.dir}, {"formats", c.output.formats}};
  return j;
}

inline std::string serialize(const ScenarioConfig& c) { return to_json(c).dump(2); }

}  // namespace cartan::cli
