#pragma once

// Experiment configuration: JSON with explicit units, normalized to linear SI.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "onoffcov/onoffcov.hpp"

namespace onoffcov::cli {

using json = nlohmann::ordered_json;

/// Schema violation; the message starts with the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what) : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class SweepType { theta, theta_grid, random_q_matched, random_q };

inline std::string to_string(SweepType t) {
  switch (t) {
    case SweepType::theta: return "theta";
    case SweepType::theta_grid: return "theta_grid";
    case SweepType::random_q_matched: return "random_q_matched";
    case SweepType::random_q: return "random_q";
  }
  return "unknown";
}

struct Sweep {
  SweepType type = SweepType::theta;
  int from = 0;
  int to = 0;
  int step = 1;
  std::vector<double> q_values;  ///< random_q
};

struct ExperimentConfig {
  std::string name;
  NetworkSpec spec;
  bool sinr = false;                 ///< false: SIR mode
  std::vector<bool> cell_edge_power; ///< per tier, power derived from the cell edge
  OccupancyModel model = OccupancyModel::exact_gamma;
  sim::Region region;
  Sweep sweep;
  std::optional<int> trials;
  std::optional<std::uint64_t> master_seed;
  int neighbor_width = 128;
  std::string output_path;
  std::string output_format = "csv";
  json validation = json::object();
  json raw;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

/// Splits "1e-4 /km2" into (1e-4, "/km2"); bare numbers carry an empty unit.
inline std::pair<double, std::string> number_and_unit(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), ""};
  if (!v.is_string()) throw ConfigError(path, "expected a number or a \"<value> <unit>\" string");
  const std::string s = trim(v.get<std::string>());
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(path, "cannot parse a number from \"" + s + "\"");
  }
  return {x, trim(s.substr(used))};
}

inline double density(const json& v, const std::string& path) {
  const auto [x, unit] = number_and_unit(v, path);
  double out = x;
  if (unit == "/km2" || unit == "per km2") out = x * 1e-6;
  else if (!(unit.empty() || unit == "/m2" || unit == "per m2")) throw ConfigError(path, "unknown density unit \"" + unit + "\"");
  if (!(out > 0.0)) throw ConfigError(path, "density must be > 0");
  return out;
}

inline double power(const json& v, const std::string& path) {
  const auto [x, unit] = number_and_unit(v, path);
  if (unit.empty() || unit == "W") return x;
  if (unit == "mW") return x * 1e-3;
  if (unit == "dBm") return std::pow(10.0, (x - 30.0) / 10.0);
  if (unit == "dBW") return std::pow(10.0, x / 10.0);
  throw ConfigError(path, "unknown power unit \"" + unit + "\"");
}

inline double ratio(const json& v, const std::string& path) {
  const auto [x, unit] = number_and_unit(v, path);
  if (unit.empty() || unit == "linear") return x;
  if (unit == "dB") return std::pow(10.0, x / 10.0);
  throw ConfigError(path, "unknown ratio unit \"" + unit + "\"");
}

inline double length(const json& v, const std::string& path) {
  const auto [x, unit] = number_and_unit(v, path);
  if (unit.empty() || unit == "m") return x;
  if (unit == "km") return x * 1e3;
  throw ConfigError(path, "unknown length unit \"" + unit + "\"");
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  if (!obj.contains(key)) throw ConfigError(path + "." + key, "missing required key");
  return obj.at(key);
}

inline int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<int>();
}

inline std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

inline void reject_unknown(const json& obj, const std::vector<std::string>& allowed, const std::string& path) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const auto& a : allowed) ok = ok || a == key;
    if (!ok) throw ConfigError(path + "." + key, "unknown key");
  }
}

inline OccupancyModel occupancy(const std::string& s, const std::string& path) {
  if (s == "exact_gamma") return OccupancyModel::exact_gamma;
  if (s == "poisson") return OccupancyModel::poisson;
  if (s == "normal") return OccupancyModel::normal;
  throw ConfigError(path, "expected exact_gamma, poisson or normal");
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& root) {
  using namespace detail;
  ExperimentConfig c;
  c.raw = root;
  if (!root.is_object()) throw ConfigError("$", "expected an object");
  reject_unknown(root, {"name", "scenario", "region", "sweep", "simulation", "output", "validation"}, "$");
  if (root.contains("name")) c.name = text(root["name"], "name");

  const json& sc = require(root, "scenario", "$");
  reject_unknown(sc, {"tiers", "user_density", "pathloss_exponent", "noise_power", "target_sinr", "occupancy_model",
                      "sinr_mode"}, "scenario");
  const json& tiers = require(sc, "tiers", "scenario");
  if (!tiers.is_array() || tiers.empty()) throw ConfigError("scenario.tiers", "expected a nonempty array");
  c.spec.pathloss_exponent = sc.contains("pathloss_exponent") ? ratio(sc["pathloss_exponent"], "scenario.pathloss_exponent") : 4.0;
  if (!(c.spec.pathloss_exponent > 2.0)) throw ConfigError("scenario.pathloss_exponent", "must be > 2");
  c.spec.user_density = density(require(sc, "user_density", "scenario"), "scenario.user_density");
  c.spec.target_sinr = sc.contains("target_sinr") ? ratio(sc["target_sinr"], "scenario.target_sinr") : 1.0;
  if (!(c.spec.target_sinr > 0.0)) throw ConfigError("scenario.target_sinr", "must be > 0");
  const std::string mode = sc.contains("sinr_mode") ? text(sc["sinr_mode"], "scenario.sinr_mode") : "sir";
  if (mode != "sir" && mode != "sinr") throw ConfigError("scenario.sinr_mode", "expected sir or sinr");
  c.sinr = mode == "sinr";
  c.spec.noise_power = sc.contains("noise_power") ? power(sc["noise_power"], "scenario.noise_power") : 0.0;
  if (c.sinr && !(c.spec.noise_power > 0.0)) throw ConfigError("scenario.noise_power", "sinr mode needs noise_power > 0");
  if (!c.sinr) c.spec.noise_power = 0.0;
  if (sc.contains("occupancy_model"))
    c.model = occupancy(text(sc["occupancy_model"], "scenario.occupancy_model"), "scenario.occupancy_model");

  for (std::size_t i = 0; i < tiers.size(); ++i) {
    const std::string p = "scenario.tiers[" + std::to_string(i) + "]";
    const json& t = tiers[i];
    reject_unknown(t, {"bs_density", "tx_power", "threshold"}, p);
    TierSpec tier;
    tier.bs_density = density(require(t, "bs_density", p), p + ".bs_density");
    bool edge = false;
    if (t.contains("tx_power") && t["tx_power"] == "cell_edge") {
      if (!c.sinr) throw ConfigError(p + ".tx_power", "cell_edge needs sinr mode");
      edge = true;
      tier.tx_power = cell_edge_base_power(tier.bs_density, c.spec.pathloss_exponent, c.spec.noise_power,
                                           c.spec.target_sinr);
    } else if (t.contains("tx_power")) {
      tier.tx_power = power(t["tx_power"], p + ".tx_power");
    }
    if (!(tier.tx_power > 0.0)) throw ConfigError(p + ".tx_power", "must be > 0");
    tier.threshold = t.contains("threshold") ? integer(t["threshold"], p + ".threshold") : 0;
    if (tier.threshold < 0) throw ConfigError(p + ".threshold", "must be >= 0");
    c.spec.tiers.push_back(tier);
    c.cell_edge_power.push_back(edge);
  }

  if (root.contains("region")) {
    const json& r = root["region"];
    reject_unknown(r, {"width", "height", "boundary", "margin"}, "region");
    if (r.contains("width")) c.region.width = length(r["width"], "region.width");
    if (r.contains("height")) c.region.height = length(r["height"], "region.height");
    if (r.contains("margin")) c.region.margin = length(r["margin"], "region.margin");
    if (r.contains("boundary")) {
      const std::string b = text(r["boundary"], "region.boundary");
      if (b == "torus") c.region.boundary = sim::Boundary::torus;
      else if (b == "inner_window") c.region.boundary = sim::Boundary::inner_window;
      else throw ConfigError("region.boundary", "expected torus or inner_window");
    }
    try {
      c.region.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("region", e.what());
    }
  }

  const json& sw = require(root, "sweep", "$");
  reject_unknown(sw, {"type", "from", "to", "step", "values"}, "sweep");
  const std::string type = text(require(sw, "type", "sweep"), "sweep.type");
  if (type == "theta") c.sweep.type = SweepType::theta;
  else if (type == "theta_grid") c.sweep.type = SweepType::theta_grid;
  else if (type == "random_q_matched") c.sweep.type = SweepType::random_q_matched;
  else if (type == "random_q") c.sweep.type = SweepType::random_q;
  else throw ConfigError("sweep.type", "expected theta, theta_grid, random_q_matched or random_q");
  if (c.sweep.type == SweepType::random_q) {
    const json& v = require(sw, "values", "sweep");
    if (!v.is_array() || v.empty()) throw ConfigError("sweep.values", "expected a nonempty array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = "sweep.values[" + std::to_string(i) + "]";
      if (!v[i].is_number()) throw ConfigError(p, "expected a number");
      const double q = v[i].get<double>();
      if (!(q > 0.0 && q <= 1.0)) throw ConfigError(p, "q must be in (0, 1]");
      c.sweep.q_values.push_back(q);
    }
    std::sort(c.sweep.q_values.begin(), c.sweep.q_values.end());
  } else {
    c.sweep.from = integer(require(sw, "from", "sweep"), "sweep.from");
    c.sweep.to = integer(require(sw, "to", "sweep"), "sweep.to");
    if (sw.contains("step")) c.sweep.step = integer(sw["step"], "sweep.step");
    if (c.sweep.from < 0) throw ConfigError("sweep.from", "must be >= 0");
    if (c.sweep.to < c.sweep.from) throw ConfigError("sweep.to", "must be >= sweep.from");
    if (c.sweep.to > 254) throw ConfigError("sweep.to", "must be <= 254");
    if (c.sweep.step < 1) throw ConfigError("sweep.step", "must be >= 1");
  }
  if ((c.sweep.type == SweepType::random_q_matched || c.sweep.type == SweepType::random_q) && c.spec.tiers.size() != 1)
    throw ConfigError("sweep.type", "random on/off sweeps need a single tier");

  if (root.contains("simulation")) {
    const json& s = root["simulation"];
    reject_unknown(s, {"trials", "master_seed", "neighbor_width"}, "simulation");
    if (s.contains("trials")) {
      c.trials = integer(s["trials"], "simulation.trials");
      if (*c.trials < 1) throw ConfigError("simulation.trials", "must be >= 1");
    }
    if (s.contains("master_seed")) {
      if (!s["master_seed"].is_number_unsigned()) throw ConfigError("simulation.master_seed", "expected a nonnegative integer");
      c.master_seed = s["master_seed"].get<std::uint64_t>();
    }
    if (s.contains("neighbor_width")) c.neighbor_width = integer(s["neighbor_width"], "simulation.neighbor_width");
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    reject_unknown(o, {"path", "format"}, "output");
    if (o.contains("path")) c.output_path = text(o["path"], "output.path");
    if (o.contains("format")) c.output_format = text(o["format"], "output.format");
    if (c.output_format != "csv" && c.output_format != "json") throw ConfigError("output.format", "expected csv or json");
  }
  if (root.contains("validation")) {
    if (!root["validation"].is_object()) throw ConfigError("validation", "expected an object");
    c.validation = root["validation"];
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("$", "cannot read " + file);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(root);
}

/// Normalized SI view of the configuration, written into run manifests.
inline json resolved(const ExperimentConfig& c) {
  json tiers = json::array();
  for (std::size_t i = 0; i < c.spec.tiers.size(); ++i) {
    const auto& t = c.spec.tiers[i];
    tiers.push_back({{"bs_density_per_m2", t.bs_density},
                     {"tx_power_w", t.tx_power},
                     {"tx_power_from_cell_edge", static_cast<bool>(c.cell_edge_power[i])},
                     {"threshold", t.threshold}});
  }
  json sweep = {{"type", to_string(c.sweep.type)}};
  if (c.sweep.type == SweepType::random_q) sweep["values"] = c.sweep.q_values;
  else sweep.update({{"from", c.sweep.from}, {"to", c.sweep.to}, {"step", c.sweep.step}});
  return {{"name", c.name},
          {"scenario",
           {{"tiers", tiers},
            {"user_density_per_m2", c.spec.user_density},
            {"pathloss_exponent", c.spec.pathloss_exponent},
            {"noise_power_w", c.spec.noise_power},
            {"target_sinr_linear", c.spec.target_sinr},
            {"sinr_mode", c.sinr ? "sinr" : "sir"},
            {"occupancy_model", to_string(c.model)}}},
          {"region",
           {{"width_m", c.region.width},
            {"height_m", c.region.height},
            {"boundary", sim::to_string(c.region.boundary)},
            {"margin_m", c.region.margin}}},
          {"sweep", sweep}};
}

}  // namespace onoffcov::cli
