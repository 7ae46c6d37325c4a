#pragma once

// Sweep tables for the command-line driver.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "onoffcov/onoffcov.hpp"

namespace onoffcov::cli {

struct Table {
  std::vector<std::string> columns;
  std::vector<json> rows;  ///< each row is an array aligned with columns
};

/// Integers verbatim, everything else with 10 significant digits.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == std::floor(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_cell(const json& v) {
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline void write_csv(std::ostream& out, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_cell(row[i]);
    out << "\n";
  }
}

/// Rows as objects keyed by column name; numbers pass through the same formatter.
inline void write_json(std::ostream& out, const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string text = format_cell(row[i]);
      obj[t.columns[i]] = !row[i].is_number() ? row[i] : text == "nan" ? json(nullptr) : json::parse(text);
    }
    rows.push_back(obj);
  }
  out << json{{"columns", t.columns}, {"rows", rows}}.dump(2) << "\n";
}

enum class Mode { analytic, simulate, full };

/// One sweep point: the thresholds (or q) it stands for and its policy.
struct SweepPoint {
  std::vector<int> thresholds;
  double q = 1.0;
  sim::OnOffPolicy policy;
};

inline std::vector<SweepPoint> threshold_points(const ExperimentConfig& c) {
  std::vector<SweepPoint> pts;
  const std::size_t k = c.spec.tiers.size();
  if (c.sweep.type == SweepType::theta_grid) {
    std::vector<int> cur(k, c.sweep.from);
    while (true) {
      pts.push_back({cur, 1.0, sim::OnOffPolicy::threshold(cur)});
      std::size_t i = k;
      while (i > 0) {
        --i;
        if (cur[i] + c.sweep.step <= c.sweep.to) {
          cur[i] += c.sweep.step;
          break;
        }
        cur[i] = c.sweep.from;
        if (i == 0) return pts;
      }
    }
  }
  for (int t = c.sweep.from; t <= c.sweep.to; t += c.sweep.step) {
    std::vector<int> th(k, t);
    pts.push_back({th, 1.0, sim::OnOffPolicy::threshold(th)});
  }
  return pts;
}

inline NetworkSpec with_thresholds(NetworkSpec spec, const std::vector<int>& th) {
  for (std::size_t i = 0; i < th.size(); ++i) spec.tiers[i].threshold = th[i];
  return spec;
}

struct SimSettings {
  int trials = 0;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Logs discarded trials to stderr; the estimates already exclude them.
inline void log_discards(const std::vector<sim::CoverageEstimate>& est) {
  for (std::size_t i = 0; i < est.size(); ++i)
    if (est[i].discarded > 0)
      std::clog << "warning: sweep point " << i << ": " << est[i].discarded << " trial(s) discarded\n";
}

inline sim::SimOptions sim_options(const ExperimentConfig& c, const SimSettings& s) {
  sim::SimOptions o;
  o.region = c.region;
  o.trials = s.trials;
  o.master_seed = s.seed;
  o.threads = s.threads;
  o.neighbor_width = c.neighbor_width;
  o.beta_model = c.model == OccupancyModel::normal ? OccupancyModel::exact_gamma : c.model;
  return o;
}

/// Builds the sweep table. Analytic columns use the interference-limited
/// expressions; simulated columns follow the configured SIR/SINR mode.
inline Table build_table(const ExperimentConfig& c, Mode mode, const SimSettings& s) {
  const NetworkSpec& spec = c.spec;
  const double t = spec.target_sinr;
  const double alpha = spec.pathloss_exponent;
  const bool analytic = mode != Mode::simulate;
  const bool simulate = mode != Mode::analytic;
  Table table;

  if (c.sweep.type == SweepType::random_q) {
    table.columns = {"q"};
    if (analytic) table.columns.insert(table.columns.end(), {"analytic_exact", "analytic_approx", "p_a", "p_1"});
    if (simulate) table.columns.insert(table.columns.end(), {"simulated_mean", "simulated_stderr", "simulated_active", "trials"});
    std::vector<sim::OnOffPolicy> policies;
    for (double q : c.sweep.q_values) policies.push_back(sim::OnOffPolicy::random(q));
    std::vector<sim::CoverageEstimate> est;
    if (simulate) est = sim::estimate_sweep(spec, policies, sim_options(c, s));
    log_discards(est);
    for (std::size_t i = 0; i < policies.size(); ++i) {
      const double q = c.sweep.q_values[i];
      json row = json::array({q});
      if (analytic) {
        const double gamma = derive_ratios(spec).gamma;
        row.push_back(coverage_random(t, gamma, q, alpha, OccupancyModel::exact_gamma));
        row.push_back(coverage_random(t, gamma, q, alpha, OccupancyModel::poisson));
        row.push_back(sim::analytic_active_probability(spec, policies[i]));
        row.push_back(1.0);
      }
      if (simulate) row.insert(row.end(), {est[i].mean, est[i].std_error, est[i].active_fraction, est[i].trials});
      table.rows.push_back(row);
    }
    return table;
  }

  const auto points = threshold_points(c);
  const std::size_t k = spec.tiers.size();
  const bool matched = c.sweep.type == SweepType::random_q_matched;
  const double gamma = derive_ratios(spec).gamma;

  if (matched) table.columns = {"off_probability", "theta", "q"};
  else if (c.sweep.type == SweepType::theta_grid)
    for (std::size_t i = 0; i < k; ++i) table.columns.push_back("theta_" + std::to_string(i + 1));
  else table.columns = {"theta"};
  if (analytic) table.columns.insert(table.columns.end(), {"analytic_exact", "analytic_approx"});
  if (simulate) table.columns.insert(table.columns.end(), {"simulated_mean", "simulated_stderr"});
  if (matched) {
    if (analytic) table.columns.push_back("random_analytic");
    if (simulate) table.columns.insert(table.columns.end(), {"random_simulated_mean", "random_simulated_stderr"});
  }
  if (analytic) table.columns.insert(table.columns.end(), {"p_a", "p_1"});
  if (simulate) table.columns.push_back("trials");

  std::vector<sim::OnOffPolicy> policies;
  std::vector<double> qs;
  for (const auto& p : points) policies.push_back(p.policy);
  if (matched) {
    for (const auto& p : points) {
      qs.push_back(activity_probs(p.thresholds[0], gamma, OccupancyModel::exact_gamma).active);
      policies.push_back(sim::OnOffPolicy::random(qs.back()));
    }
  }
  std::vector<sim::CoverageEstimate> est;
  if (simulate) est = sim::estimate_sweep(spec, policies, sim_options(c, s));
  log_discards(est);

  for (std::size_t i = 0; i < points.size(); ++i) {
    const NetworkSpec sp = with_thresholds(spec, points[i].thresholds);
    const HetActivity act = hetnet_activity(sp, OccupancyModel::exact_gamma);
    json row = json::array();
    if (matched) row.insert(row.end(), {1.0 - qs[i], points[i].thresholds[0], qs[i]});
    else if (c.sweep.type == SweepType::theta_grid)
      for (int th : points[i].thresholds) row.push_back(th);
    else row.push_back(points[i].thresholds[0]);
    if (analytic) {
      row.push_back(coverage_hetnet_sir(sp, OccupancyModel::exact_gamma));
      row.push_back(coverage_hetnet_sir(sp, OccupancyModel::poisson));
    }
    if (simulate) row.insert(row.end(), {est[i].mean, est[i].std_error});
    if (matched) {
      if (analytic) row.push_back(coverage_random(t, gamma, qs[i], alpha, OccupancyModel::exact_gamma));
      if (simulate) row.insert(row.end(), {est[points.size() + i].mean, est[points.size() + i].std_error});
    }
    if (analytic) row.insert(row.end(), {act.average.active, act.average.nearest});
    if (simulate) row.push_back(est[i].trials);
    table.rows.push_back(row);
  }
  return table;
}

/// Largest |simulated_mean - analytic_exact| over the rows, with its row index.
inline std::pair<double, std::size_t> max_deviation(const Table& t) {
  std::size_t sim_col = 0, an_col = 0;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == "simulated_mean") sim_col = i;
    if (t.columns[i] == "analytic_exact") an_col = i;
  }
  double worst = 0.0;
  std::size_t at = 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double d = std::fabs(t.rows[r][sim_col].get<double>() - t.rows[r][an_col].get<double>());
    if (d > worst) {
      worst = d;
      at = r;
    }
  }
  return {worst, at};
}

/// Optimizer report: closed form and exhaustive search for each occupancy model.
inline Table optimize_report(const ExperimentConfig& c) {
  const NetworkSpec& spec = c.spec;
  Table table;
  table.columns = {"method", "occupancy_model", "thresholds", "achieved_coverage"};
  auto join = [](const std::vector<int>& th) {
    std::string s;
    for (std::size_t i = 0; i < th.size(); ++i) s += (i ? ";" : "") + std::to_string(th[i]);
    return s;
  };
  const int theta_max = c.sweep.type == SweepType::random_q ? -1 : c.sweep.to;
  for (OccupancyModel m : {OccupancyModel::exact_gamma, OccupancyModel::poisson}) {
    if (spec.tiers.size() == 1) {
      const double gamma = derive_ratios(spec).gamma;
      const int top = theta_max >= 0 ? theta_max : static_cast<int>(std::ceil(3.0 * gamma)) + 10;
      const auto closed = optimal_threshold_closed_result(spec.target_sinr, gamma, spec.pathloss_exponent, top, m);
      const auto search = optimal_threshold_search(spec.target_sinr, gamma, spec.pathloss_exponent, top, m);
      table.rows.push_back(json::array({"closed_form", to_string(m), join(closed.thresholds), closed.achieved_coverage}));
      table.rows.push_back(json::array({"exhaustive", to_string(m), join(search.thresholds), search.achieved_coverage}));
    } else {
      const auto closed = optimal_thresholds_hetnet(spec, m, HetnetSearch::closed_form, theta_max);
      const auto ascent = optimal_thresholds_hetnet(spec, m, HetnetSearch::coordinate_ascent, theta_max);
      table.rows.push_back(json::array({"closed_form", to_string(m), join(closed.thresholds), closed.achieved_coverage}));
      table.rows.push_back(
          json::array({"coordinate_ascent", to_string(m), join(ascent.thresholds), ascent.achieved_coverage}));
      if (spec.tiers.size() == 2) {
        const auto grid = optimal_thresholds_hetnet(spec, m, HetnetSearch::full_grid, theta_max);
        table.rows.push_back(json::array({"full_grid", to_string(m), join(grid.thresholds), grid.achieved_coverage}));
      }
    }
  }
  return table;
}

}  // namespace onoffcov::cli
