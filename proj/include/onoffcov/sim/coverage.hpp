#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "onoffcov/analytic.hpp"
#include "onoffcov/model.hpp"
#include "onoffcov/sim/association.hpp"
#include "onoffcov/sim/philox.hpp"
#include "onoffcov/sim/snapshot.hpp"

namespace onoffcov::sim {

class SimulationAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SIR when noise_power == 0. Otherwise tier tx_power is the pre-control
/// power P_T and every active BS transmits beta * P_T.
struct SinrMode {
  double noise_power = 0.0;
  double beta = 1.0;

  bool sir() const { return noise_power == 0.0; }
  double noise_term() const { return sir() ? 0.0 : noise_power / beta; }
};

/// Population activity probability used for beta: p_a for thresholds (q-averaged
/// across tiers), q * p_a(0, gamma/q) for random on/off, 1 with everything on.
inline double analytic_active_probability(const NetworkSpec& spec, const OnOffPolicy& policy,
                                          OccupancyModel model = OccupancyModel::exact_gamma) {
  switch (policy.kind) {
    case PolicyKind::none:
      return 1.0;
    case PolicyKind::threshold: {
      NetworkSpec s = spec;
      for (std::size_t i = 0; i < s.tiers.size(); ++i) s.tiers[i].threshold = policy.thresholds.at(i);
      return hetnet_activity(s, model).average.active;
    }
    case PolicyKind::random: {
      const DerivedRatios r = derive_ratios(spec);
      double active = 0.0;
      for (std::size_t i = 0; i < spec.tiers.size(); ++i)
        active += r.tier_probability[i] * random_active_probability(r.weighted_ratio[i], policy.keep_probability, model);
      return policy.keep_probability * active;
    }
  }
  return 1.0;
}

inline SinrMode sinr_mode_for(const NetworkSpec& spec, const OnOffPolicy& policy,
                              OccupancyModel model = OccupancyModel::exact_gamma) {
  if (spec.interference_limited()) return {};
  return {spec.noise_power, power_control_beta(analytic_active_probability(spec, policy, model), spec.pathloss_exponent)};
}

/// Received power (fading included, before beta) from every BS at one user.
/// Fading for link (user, b) is word b%4 of Philox block (b/4, user, trial, fading).
inline void link_gains(const Snapshot& snap, const Region& region, const std::vector<double>& bs_power, double alpha,
                       std::uint32_t user, std::vector<double>& gain) {
  const std::size_t nb = snap.bs_count();
  gain.resize(nb);
  const auto key = philox_key(snap.master_seed);
  const double ux = snap.user_x[user];
  const double uy = snap.user_y[user];
  const bool alpha4 = alpha == 4.0;
  for (std::size_t b0 = 0; b0 < nb; b0 += 4) {
    const auto block =
        Philox4x32::apply(make_counter(static_cast<std::uint32_t>(b0 / 4), user, snap.trial, Purpose::fading), key);
    const std::size_t end = std::min(nb, b0 + 4);
    for (std::size_t b = b0; b < end; ++b) {
      const double d2 = std::max(region.squared_distance(ux, uy, snap.bs_x[b], snap.bs_y[b]), 1e-9);
      const double path = alpha4 ? 1.0 / (d2 * d2) : std::pow(d2, -0.5 * alpha);
      gain[b] = bs_power[b] * -std::log(u01_open(block[b - b0])) * path;
    }
  }
}

inline std::vector<double> bs_powers(const NetworkSpec& spec, const Snapshot& snap) {
  std::vector<double> p(snap.bs_count());
  for (std::size_t b = 0; b < p.size(); ++b) p[b] = spec.tiers[snap.bs_tier[b]].tx_power;
  return p;
}

struct CoverageIndicators {
  std::vector<int> users;  ///< measured users
  std::vector<std::uint8_t> covered;
};

/// Reference evaluation: interference summed directly over active BSs.
inline CoverageIndicators evaluate_coverage(const Snapshot& snap, const Association& assoc, const NetworkSpec& spec,
                                            const Region& region, const SinrMode& mode) {
  CoverageIndicators out;
  const auto power = bs_powers(spec, snap);
  std::vector<double> gain;
  for (std::size_t u = 0; u < snap.user_count(); ++u) {
    if (!region.measured(snap.user_x[u], snap.user_y[u])) continue;
    link_gains(snap, region, power, spec.pathloss_exponent, static_cast<std::uint32_t>(u), gain);
    const int s = assoc.serving_bs[u];
    double interference = 0.0;
    for (std::size_t b = 0; b < gain.size(); ++b)
      if (assoc.active[b] && static_cast<int>(b) != s) interference += gain[b];
    out.users.push_back(static_cast<int>(u));
    out.covered.push_back(gain[s] > spec.target_sinr * (interference + mode.noise_term()));
  }
  return out;
}

struct CoverageEstimate {
  double mean = 0.0;
  double std_error = 0.0;  ///< std of per-trial covered fractions / sqrt(trials)
  int trials = 0;          ///< trials that contributed
  long long per_user_samples = 0;
  int discarded = 0;
  double active_fraction = 0.0;   ///< BSs left on
  double nearest_fraction = 0.0;  ///< users served by their weighted-nearest BS
};

struct SimOptions {
  Region region;
  int trials = 100;
  std::uint64_t master_seed = 1;
  int threads = 1;
  int neighbor_width = 128;
  double max_discard_fraction = 0.1;
  OccupancyModel beta_model = OccupancyModel::exact_gamma;
};

namespace detail {

inline constexpr int kCountBuckets = 256;

struct PointTally {
  bool valid = false;
  long long covered = 0;
  long long measured = 0;
  long long nearest = 0;
  long long active_bs = 0;
  long long total_bs = 0;
};

struct PointPlan {
  bool valid = false;
  Association assoc;
  double noise_term = 0.0;
  std::size_t survivors = 0;              ///< random: BSs with U < q
  std::vector<int> dropped_survivors;     ///< random: survivors left without users
};

/// One trial, every sweep point. Interference for all points comes from one
/// pass over the BSs per user: threshold points read suffix sums of per-(tier,
/// count) buckets, random points read prefix sums in U order.
inline std::vector<PointTally> run_trial(const NetworkSpec& spec, const std::vector<OnOffPolicy>& policies,
                                         const std::vector<double>& noise_terms, const SimOptions& opt,
                                         std::uint32_t trial) {
  std::vector<PointTally> tally(policies.size());
  Snapshot snap;
  Association pre;
  try {
    snap = sample_snapshot(spec, opt.region, opt.master_seed, trial);
    pre = associate(snap, spec, opt.region, opt.neighbor_width);
  } catch (const TrialDiscarded&) {
    return tally;
  }
  const std::size_t nb = snap.bs_count();
  const std::size_t k = spec.tiers.size();

  std::vector<int> by_uniform(nb);
  std::iota(by_uniform.begin(), by_uniform.end(), 0);
  std::sort(by_uniform.begin(), by_uniform.end(), [&](int a, int b) {
    return snap.bs_uniform[a] < snap.bs_uniform[b] || (snap.bs_uniform[a] == snap.bs_uniform[b] && a < b);
  });

  bool need_buckets = false;
  bool need_prefix = false;
  std::vector<PointPlan> plan(policies.size());
  for (std::size_t p = 0; p < policies.size(); ++p) {
    try {
      plan[p].assoc = apply_onoff(pre, snap, spec, opt.region, policies[p]);
    } catch (const TrialDiscarded&) {
      continue;
    }
    plan[p].valid = true;
    plan[p].noise_term = noise_terms[p];
    if (policies[p].kind == PolicyKind::random) {
      need_prefix = true;
      const double q = policies[p].keep_probability;
      plan[p].survivors = static_cast<std::size_t>(
          std::partition_point(by_uniform.begin(), by_uniform.end(), [&](int b) { return snap.bs_uniform[b] < q; }) -
          by_uniform.begin());
      for (std::size_t j = 0; j < plan[p].survivors; ++j)
        if (!plan[p].assoc.active[by_uniform[j]]) plan[p].dropped_survivors.push_back(by_uniform[j]);
    } else {
      need_buckets = true;
    }
    tally[p].valid = true;
    tally[p].total_bs = static_cast<long long>(nb);
    tally[p].active_bs = std::count(plan[p].assoc.active.begin(), plan[p].assoc.active.end(), 1);
  }

  const auto power = bs_powers(spec, snap);
  std::vector<double> gain;
  std::vector<double> suffix(k * (kCountBuckets + 1));
  std::vector<double> prefix(nb + 1);
  for (std::size_t u = 0; u < snap.user_count(); ++u) {
    if (!opt.region.measured(snap.user_x[u], snap.user_y[u])) continue;
    link_gains(snap, opt.region, power, spec.pathloss_exponent, static_cast<std::uint32_t>(u), gain);

    if (need_buckets) {
      std::fill(suffix.begin(), suffix.end(), 0.0);
      for (std::size_t b = 0; b < nb; ++b) {
        const int c = std::min(pre.bs_user_count[b], kCountBuckets - 1);
        suffix[snap.bs_tier[b] * (kCountBuckets + 1) + c] += gain[b];
      }
      for (std::size_t t = 0; t < k; ++t) {
        double* s = suffix.data() + t * (kCountBuckets + 1);
        for (int c = kCountBuckets - 1; c >= 0; --c) s[c] += s[c + 1];
      }
    }
    if (need_prefix) {
      prefix[0] = 0.0;
      for (std::size_t j = 0; j < nb; ++j) prefix[j + 1] = prefix[j] + gain[by_uniform[j]];
    }

    for (std::size_t p = 0; p < policies.size(); ++p) {
      if (!plan[p].valid) continue;
      const Association& a = plan[p].assoc;
      double total = 0.0;
      switch (policies[p].kind) {
        case PolicyKind::none:
          for (std::size_t t = 0; t < k; ++t) total += suffix[t * (kCountBuckets + 1)];
          break;
        case PolicyKind::threshold:
          for (std::size_t t = 0; t < k; ++t)
            total += suffix[t * (kCountBuckets + 1) + policies[p].thresholds[t] + 1];
          break;
        case PolicyKind::random:
          total = prefix[plan[p].survivors];
          for (int b : plan[p].dropped_survivors) total -= gain[b];
          break;
      }
      const double signal = gain[a.serving_bs[u]];
      const double interference = std::max(total - signal, 0.0);
      auto& t = tally[p];
      ++t.measured;
      t.covered += signal > spec.target_sinr * (interference + plan[p].noise_term);
      t.nearest += a.order[u] == 1;
    }
  }
  for (auto& t : tally)
    if (t.valid && t.measured == 0) t.valid = false;
  return tally;
}

}  // namespace detail

/// Monte Carlo coverage for each policy on the same trials. Trial i always
/// sees the same snapshot and fading, so results do not depend on the worker
/// count or on which other policies share the sweep.
inline std::vector<CoverageEstimate> estimate_sweep(const NetworkSpec& spec, const std::vector<OnOffPolicy>& policies,
                                                    const SimOptions& opt) {
  spec.validate();
  opt.region.validate();
  if (opt.trials < 1) throw std::invalid_argument("estimate: trials must be >= 1");
  for (const auto& p : policies) p.validate(spec.tiers.size());

  std::vector<double> noise_terms;
  for (const auto& p : policies) noise_terms.push_back(sinr_mode_for(spec, p, opt.beta_model).noise_term());

  std::vector<std::vector<detail::PointTally>> per_trial(opt.trials);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < opt.trials; i = next++)
      per_trial[i] = detail::run_trial(spec, policies, noise_terms, opt, static_cast<std::uint32_t>(i));
  };
  const int threads = std::max(1, std::min(opt.threads, opt.trials));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<CoverageEstimate> out(policies.size());
  for (std::size_t p = 0; p < policies.size(); ++p) {
    CoverageEstimate& e = out[p];
    long long covered = 0, nearest = 0, active = 0, total_bs = 0;
    std::vector<double> fractions;
    for (int i = 0; i < opt.trials; ++i) {
      const auto& t = per_trial[i][p];
      if (!t.valid) {
        ++e.discarded;
        continue;
      }
      covered += t.covered;
      nearest += t.nearest;
      active += t.active_bs;
      total_bs += t.total_bs;
      e.per_user_samples += t.measured;
      fractions.push_back(static_cast<double>(t.covered) / t.measured);
    }
    if (e.discarded > opt.max_discard_fraction * opt.trials || fractions.empty())
      throw SimulationAborted("discarded " + std::to_string(e.discarded) + " of " + std::to_string(opt.trials) +
                              " trials");
    e.trials = static_cast<int>(fractions.size());
    e.mean = static_cast<double>(covered) / e.per_user_samples;
    e.nearest_fraction = static_cast<double>(nearest) / e.per_user_samples;
    e.active_fraction = static_cast<double>(active) / total_bs;
    if (e.trials > 1) {
      double avg = 0.0;
      for (double f : fractions) avg += f;
      avg /= e.trials;
      double ss = 0.0;
      for (double f : fractions) ss += (f - avg) * (f - avg);
      e.std_error = std::sqrt(ss / (e.trials - 1) / e.trials);
    }
  }
  return out;
}

inline CoverageEstimate estimate(const NetworkSpec& spec, const OnOffPolicy& policy, const SimOptions& opt) {
  return estimate_sweep(spec, {policy}, opt).front();
}

}  // namespace onoffcov::sim
