#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "experiment.hpp"
#include "onoffcov/onoffcov.hpp"

namespace {

using namespace onoffcov;
using namespace onoffcov::cli;

constexpr int kExitSchema = 1;
constexpr int kExitAbort = 2;
constexpr int kExitValidation = 3;
constexpr int kExitInternal = 4;

struct Flags {
  std::string config;
  std::string out;
  std::string format;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

SimSettings settings(const ExperimentConfig& c, const Flags& f) {
  SimSettings s;
  const auto trials = f.trials ? f.trials : c.trials;
  const auto seed = f.seed ? f.seed : c.master_seed;
  if (!trials) throw ConfigError("simulation.trials", "required for simulation (or pass --trials)");
  if (!seed) throw ConfigError("simulation.master_seed", "required for simulation (or pass --seed)");
  if (*trials < 1) throw ConfigError("simulation.trials", "must be >= 1");
  s.trials = *trials;
  s.seed = *seed;
  s.threads = std::max(1, f.threads);
  return s;
}

void emit(const Table& t, const ExperimentConfig& c, const Flags& f, const std::string& command,
          const std::optional<SimSettings>& s) {
  const std::string path = f.out.empty() ? c.output_path : f.out;
  const std::string format = f.format.empty() ? c.output_format : f.format;
  if (format != "csv" && format != "json") throw ConfigError("output.format", "expected csv or json");
  auto write = [&](std::ostream& os) { format == "csv" ? write_csv(os, t) : write_json(os, t); };
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw ConfigError("output.path", "cannot write " + path);
  write(os);
  json manifest = {{"tool", "onoffcov"}, {"version", kVersion}, {"command", command}, {"config", resolved(c)}};
  if (s) manifest["simulation"] = {{"trials", s->trials}, {"master_seed", s->seed}};
  std::ofstream ms(path + ".manifest.json");
  ms << manifest.dump(2) << "\n";
}

int run_table(const Flags& f, Mode mode, const std::string& command) {
  const ExperimentConfig c = load_config(f.config);
  std::optional<SimSettings> s;
  if (mode == Mode::analytic) {
    if (f.trials || c.trials) std::cerr << "warning: trials ignored by the analytic command\n";
  } else {
    s = settings(c, f);
  }
  const Table t = build_table(c, mode, s.value_or(SimSettings{}));
  emit(t, c, f, command, s);
  if (command == "compare") {
    const auto [worst, row] = max_deviation(t);
    std::cout << "max |simulated - analytic_exact| = " << format_number(worst) << " at row " << row << " ("
              << t.columns[0] << " = " << format_cell(t.rows[row][0]) << ")\n";
  }
  return 0;
}

int run_optimize(const Flags& f) {
  const ExperimentConfig c = load_config(f.config);
  emit(optimize_report(c), c, f, "optimize", std::nullopt);
  return 0;
}

/// Distributional checks of the simulator on the configured scenario.
int run_validate(const Flags& f) {
  const ExperimentConfig c = load_config(f.config);
  const json& v = c.validation;
  const int trials = f.trials.value_or(v.value("trials", 200));
  const std::uint64_t seed = f.seed.value_or(v.value("seed", c.master_seed.value_or(std::uint64_t{1})));
  const int samples = v.value("samples", 10000);
  const int n = v.value("order", 3);
  const NetworkSpec& spec = c.spec;
  const DerivedRatios ratios = derive_ratios(spec);
  bool ok = true;
  auto report = [&](const std::string& name, double value, double limit, bool pass) {
    ok = ok && pass;
    std::cout << (pass ? "PASS " : "FAIL ") << name << " value=" << format_number(value)
              << " limit=" << format_number(limit) << "\n";
  };

  if (spec.tiers.size() == 1) {
    const auto hist = sim::occupancy_histogram(spec, c.region, trials, seed);
    const double tv = sim::occupancy_total_variation(hist, ratios.gamma, OccupancyModel::exact_gamma);
    report("occupancy_total_variation", tv, 0.03, tv <= 0.03);
  }

  if (c.sweep.type == SweepType::theta || c.sweep.type == SweepType::theta_grid) {
    const auto points = threshold_points(c);
    std::vector<sim::OnOffPolicy> policies;
    for (const auto& p : points) policies.push_back(p.policy);
    const auto stats = sim::activity_statistics(spec, c.region, policies, trials, seed);
    double worst_active = 0.0, worst_nearest = 0.0;
    double total_density = 0.0;
    for (const auto& t : spec.tiers) total_density += t.bs_density;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const HetActivity act = hetnet_activity(with_thresholds(spec, points[i].thresholds), OccupancyModel::exact_gamma);
      double expected_active = 0.0;  // fraction of all BSs, so weighted by density
      for (std::size_t k = 0; k < spec.tiers.size(); ++k)
        expected_active += spec.tiers[k].bs_density / total_density * act.per_tier[k].active;
      worst_active = std::max(worst_active, std::fabs(stats[i].active_fraction - expected_active));
      worst_nearest = std::max(worst_nearest, std::fabs(stats[i].nearest_fraction - act.average.nearest));
    }
    report("active_fraction_max_abs_error", worst_active, 0.02, worst_active <= 0.02);
    report("nearest_fraction_max_abs_error", worst_nearest, 0.02, worst_nearest <= 0.02);
  }

  const auto nth = sim::empirical_nth_distance(spec, c.region, n, samples, seed);
  for (std::size_t k = 0; k < spec.tiers.size(); ++k) {
    std::vector<double> d;
    for (std::size_t i = 0; i < nth.distance.size(); ++i)
      if (nth.tier[i] == static_cast<int>(k)) d.push_back(nth.distance[i]);
    if (d.size() < 100) continue;
    const double lam = ratios.weighted_density[k];
    const double ks = sim::ks_statistic(d, [&](double r) { return 1.0 - nth_distance_ccdf(r, n, lam); });
    report("nth_distance_ks_tier_" + std::to_string(k + 1), ks, 0.03, ks < 0.03);
  }
  if (spec.tiers.size() > 1 && n > 1) {
    const auto chi = sim::multinomial_chi_square(nth.nearer_tiers, n - 1, ratios.tier_probability);
    report("nearer_tier_multinomial_p_value", chi.p_value, 0.01, chi.p_value > 0.01);
  }
  return ok ? 0 : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coverage of cellular networks under user-number-threshold BS on/off control"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "Output table path (default: config output.path, else stdout)");
    sub->add_option("--format", flags.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--trials", flags.trials, "Override simulation.trials");
    sub->add_option("--seed", flags.seed, "Override simulation.master_seed");
    sub->add_option("--threads", flags.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "Analytic and simulated sweep with manifest");
  auto* analytic = app.add_subcommand("analytic", "Analytic sweep only");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo sweep only");
  auto* optimize = app.add_subcommand("optimize", "Optimal thresholds report");
  auto* compare = app.add_subcommand("compare", "Sweep plus max |simulated - analytic|");
  auto* validate = app.add_subcommand("validate", "Distributional property checks");
  for (auto* sub : {run, analytic, simulate, optimize, compare, validate}) add_common(sub);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return run_table(flags, Mode::full, "run");
    if (*analytic) return run_table(flags, Mode::analytic, "analytic");
    if (*simulate) return run_table(flags, Mode::simulate, "simulate");
    if (*compare) return run_table(flags, Mode::full, "compare");
    if (*optimize) return run_optimize(flags);
    if (*validate) return run_validate(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const sim::SimulationAborted& e) {
    std::cerr << "simulation aborted: " << e.what() << "\n";
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
