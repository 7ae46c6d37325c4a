#pragma once

// Distributional checks of the simulator against the analytic building blocks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "onoffcov/analytic.hpp"
#include "onoffcov/model.hpp"
#include "onoffcov/sim/association.hpp"
#include "onoffcov/sim/philox.hpp"
#include "onoffcov/sim/snapshot.hpp"
#include "onoffcov/specialfn.hpp"

namespace onoffcov::sim {

struct NthDistanceSamples {
  std::vector<double> distance;              ///< actual distance to the n-th weighted-nearest BS
  std::vector<int> tier;                     ///< its tier
  std::vector<std::vector<int>> nearer_tiers;///< per sample, tier counts of the n-1 nearer BSs
};

/// Probes dropped uniformly on independent BS layouts; each probe records its
/// n-th weighted-nearest BS.
inline NthDistanceSamples empirical_nth_distance(const NetworkSpec& spec, const Region& region, int n, int samples,
                                                 std::uint64_t seed, int probes_per_snapshot = 8) {
  if (n < 1) throw std::invalid_argument("empirical_nth_distance: n must be >= 1");
  if (samples < 1 || probes_per_snapshot < 1) throw std::invalid_argument("empirical_nth_distance: counts must be >= 1");
  spec.validate();
  region.validate();
  NthDistanceSamples out;
  std::vector<double> key;
  std::vector<int> order;
  for (std::uint32_t trial = 0; static_cast<int>(out.distance.size()) < samples; ++trial) {
    Snapshot snap;
    try {
      sample_base_stations(spec, region, seed, trial, snap);
    } catch (const TrialDiscarded&) {
      continue;
    }
    const std::size_t nb = snap.bs_count();
    if (nb < static_cast<std::size_t>(n)) continue;
    const auto inv_w2 = inverse_weight_squared(spec, snap);
    PhiloxEngine eng(seed, 0, trial, Purpose::probe_placement);
    key.resize(nb);
    order.resize(nb);
    for (int p = 0; p < probes_per_snapshot && static_cast<int>(out.distance.size()) < samples; ++p) {
      const double x = eng.uniform() * region.width;
      const double y = eng.uniform() * region.height;
      for (std::size_t b = 0; b < nb; ++b)
        key[b] = region.squared_distance(x, y, snap.bs_x[b], snap.bs_y[b]) * inv_w2[b];
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + n, order.end(),
                        [&](int a, int b) { return key[a] < key[b] || (key[a] == key[b] && a < b); });
      const int nth = order[n - 1];
      out.distance.push_back(std::sqrt(key[nth] / inv_w2[nth]));
      out.tier.push_back(snap.bs_tier[nth]);
      std::vector<int> counts(spec.tiers.size(), 0);
      for (int j = 0; j + 1 < n; ++j) ++counts[snap.bs_tier[order[j]]];
      out.nearer_tiers.push_back(std::move(counts));
    }
  }
  return out;
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Survival function of the chi-square law with integer degrees of freedom.
inline double chi_square_sf(double x, int df) {
  if (df < 1) throw std::invalid_argument("chi_square_sf: df must be >= 1");
  if (x <= 0.0) return 1.0;
  const double h = 0.5 * x;
  if (df % 2 == 0) return regularized_upper_gamma(df / 2, h);
  double sf = std::erfc(std::sqrt(h));
  double term = std::exp(-h) * std::sqrt(h) / std::tgamma(1.5);  // k = 1
  for (int k = 1; k <= (df - 1) / 2; ++k) {
    sf += term;
    term *= h / (k + 0.5);
  }
  return sf;
}

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Goodness of fit of tier-count vectors to Multinomial(trials, q).
inline ChiSquareResult multinomial_chi_square(const std::vector<std::vector<int>>& counts, int trials,
                                              const std::vector<double>& q) {
  if (counts.empty()) throw std::invalid_argument("multinomial_chi_square: no samples");
  std::map<std::vector<int>, long long> observed;
  for (const auto& c : counts) ++observed[c];

  // Enumerate every composition of `trials` into q.size() parts.
  std::vector<std::vector<int>> cells;
  std::vector<int> cur(q.size(), 0);
  std::function<void(std::size_t, int)> walk = [&](std::size_t i, int left) {
    if (i + 1 == q.size()) {
      cur[i] = left;
      cells.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[i] = v;
      walk(i + 1, left - v);
    }
  };
  walk(0, trials);

  const double n = static_cast<double>(counts.size());
  ChiSquareResult r;
  for (const auto& cell : cells) {
    double log_p = std::lgamma(trials + 1.0);
    for (std::size_t i = 0; i < q.size(); ++i)
      log_p += cell[i] * std::log(q[i]) - std::lgamma(cell[i] + 1.0);
    const double expected = n * std::exp(log_p);
    const auto it = observed.find(cell);
    const double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
    r.statistic += (o - expected) * (o - expected) / expected;
  }
  r.df = static_cast<int>(cells.size()) - 1;
  r.p_value = r.df > 0 ? chi_square_sf(r.statistic, r.df) : 1.0;
  return r;
}

/// Empirical distribution of users per BS before on/off control.
inline std::vector<double> occupancy_histogram(const NetworkSpec& spec, const Region& region, int trials,
                                               std::uint64_t seed) {
  std::vector<long long> hist;
  long long total = 0;
  for (int t = 0; t < trials; ++t) {
    Snapshot snap;
    Association a;
    try {
      snap = sample_snapshot(spec, region, seed, static_cast<std::uint32_t>(t));
      a = associate(snap, spec, region, 1);
    } catch (const TrialDiscarded&) {
      continue;
    }
    for (int c : a.bs_user_count) {
      if (static_cast<std::size_t>(c) >= hist.size()) hist.resize(c + 1, 0);
      ++hist[c];
      ++total;
    }
  }
  std::vector<double> out(hist.size());
  for (std::size_t m = 0; m < hist.size(); ++m) out[m] = static_cast<double>(hist[m]) / total;
  return out;
}

/// Total variation distance between an empirical PMF and the occupancy model.
inline double occupancy_total_variation(const std::vector<double>& empirical, double gamma, OccupancyModel model) {
  double tv = 0.0;
  double model_mass = 0.0;
  for (std::size_t m = 0; m < empirical.size(); ++m) {
    const double p = occupancy_pmf(static_cast<int>(m), gamma, model);
    model_mass += p;
    tv += std::fabs(empirical[m] - p);
  }
  tv += std::max(0.0, 1.0 - model_mass);  // model mass beyond the largest observed count
  return 0.5 * tv;
}

struct ActivityStatistics {
  double active_fraction = 0.0;   ///< BSs left on
  double nearest_fraction = 0.0;  ///< users still served by their weighted-nearest BS
  int trials = 0;
};

/// Geometry-only activity statistics per policy, pooled over trials.
inline std::vector<ActivityStatistics> activity_statistics(const NetworkSpec& spec, const Region& region,
                                                           const std::vector<OnOffPolicy>& policies, int trials,
                                                           std::uint64_t seed) {
  std::vector<long long> active(policies.size(), 0), total(policies.size(), 0);
  std::vector<long long> nearest(policies.size(), 0), users(policies.size(), 0);
  std::vector<ActivityStatistics> out(policies.size());
  for (int t = 0; t < trials; ++t) {
    Snapshot snap;
    Association pre;
    try {
      snap = sample_snapshot(spec, region, seed, static_cast<std::uint32_t>(t));
      pre = associate(snap, spec, region);
    } catch (const TrialDiscarded&) {
      continue;
    }
    for (std::size_t p = 0; p < policies.size(); ++p) {
      Association a;
      try {
        a = apply_onoff(pre, snap, spec, region, policies[p]);
      } catch (const TrialDiscarded&) {
        continue;
      }
      ++out[p].trials;
      active[p] += std::count(a.active.begin(), a.active.end(), 1);
      total[p] += static_cast<long long>(a.active.size());
      nearest[p] += std::count(a.order.begin(), a.order.end(), 1);
      users[p] += static_cast<long long>(a.order.size());
    }
  }
  for (std::size_t p = 0; p < policies.size(); ++p) {
    if (total[p] > 0) out[p].active_fraction = static_cast<double>(active[p]) / total[p];
    if (users[p] > 0) out[p].nearest_fraction = static_cast<double>(nearest[p]) / users[p];
  }
  return out;
}

}  // namespace onoffcov::sim
