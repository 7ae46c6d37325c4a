#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "onoffcov/model.hpp"
#include "onoffcov/sim/snapshot.hpp"

namespace onoffcov::sim {

/// Per-BS factor 1 / w^2 (powers normalized by the largest) turning squared
/// distance into squared weighted distance.
inline std::vector<double> inverse_weight_squared(const NetworkSpec& spec, const Snapshot& snap) {
  double max_power = 0.0;
  for (const auto& t : spec.tiers) max_power = std::max(max_power, t.tx_power);
  std::vector<double> per_tier;
  for (const auto& t : spec.tiers)
    per_tier.push_back(std::pow(t.tx_power / max_power, -2.0 / spec.pathloss_exponent));
  std::vector<double> out(snap.bs_count());
  for (std::size_t b = 0; b < out.size(); ++b) out[b] = per_tier[snap.bs_tier[b]];
  return out;
}

/// For each user, the `width` weighted-nearest BSs in ascending order (ties by index).
struct NeighborTable {
  int width = 0;
  std::vector<std::int32_t> index;
  std::vector<double> inverse_w2;

  const std::int32_t* row(std::size_t user) const { return index.data() + user * width; }

  static NeighborTable build(const Snapshot& snap, const NetworkSpec& spec, const Region& region, int width) {
    NeighborTable t;
    const std::size_t nb = snap.bs_count();
    if (nb == 0) throw TrialDiscarded("snapshot has no base stations");
    t.width = static_cast<int>(std::min<std::size_t>(std::max(width, 1), nb));
    t.inverse_w2 = inverse_weight_squared(spec, snap);
    t.index.resize(snap.user_count() * t.width);
    std::vector<double> key(nb);
    std::vector<std::int32_t> order(nb);
    for (std::size_t u = 0; u < snap.user_count(); ++u) {
      for (std::size_t b = 0; b < nb; ++b)
        key[b] = region.squared_distance(snap.user_x[u], snap.user_y[u], snap.bs_x[b], snap.bs_y[b]) * t.inverse_w2[b];
      std::iota(order.begin(), order.end(), 0);
      auto less = [&key](std::int32_t a, std::int32_t b) { return key[a] < key[b] || (key[a] == key[b] && a < b); };
      if (static_cast<std::size_t>(t.width) < nb) std::nth_element(order.begin(), order.begin() + t.width, order.end(), less);
      std::sort(order.begin(), order.begin() + t.width, less);
      std::copy(order.begin(), order.begin() + t.width, t.index.begin() + u * t.width);
    }
    return t;
  }
};

struct Association {
  std::vector<int> serving_bs;
  std::vector<int> bs_user_count;
  std::vector<std::uint8_t> active;
  std::vector<int> order;  ///< 1 = nearest in weighted distance
  std::shared_ptr<const NeighborTable> neighbors;
};

/// Weighted-nearest association with every BS on.
inline Association associate(const Snapshot& snap, const NetworkSpec& spec, const Region& region,
                             int neighbor_width = 128) {
  Association a;
  a.neighbors = std::make_shared<NeighborTable>(NeighborTable::build(snap, spec, region, neighbor_width));
  a.serving_bs.resize(snap.user_count());
  a.order.assign(snap.user_count(), 1);
  a.bs_user_count.assign(snap.bs_count(), 0);
  a.active.assign(snap.bs_count(), 1);
  for (std::size_t u = 0; u < snap.user_count(); ++u) {
    a.serving_bs[u] = a.neighbors->row(u)[0];
    ++a.bs_user_count[a.serving_bs[u]];
  }
  return a;
}

enum class PolicyKind { none, threshold, random };

struct OnOffPolicy {
  PolicyKind kind = PolicyKind::none;
  std::vector<int> thresholds;   ///< per tier, threshold policy
  double keep_probability = 1.0; ///< q, random policy

  static OnOffPolicy all_on() { return {}; }
  static OnOffPolicy threshold(std::vector<int> per_tier) { return {PolicyKind::threshold, std::move(per_tier), 1.0}; }
  static OnOffPolicy random(double q) { return {PolicyKind::random, {}, q}; }

  void validate(std::size_t tiers) const {
    if (kind == PolicyKind::threshold) {
      if (thresholds.size() != tiers) throw std::invalid_argument("OnOffPolicy: one threshold per tier required");
      for (int t : thresholds)
        if (t < 0 || t > 254) throw std::invalid_argument("OnOffPolicy: thresholds must be in [0, 254]");
    }
    if (kind == PolicyKind::random && !(keep_probability > 0.0 && keep_probability <= 1.0))
      throw std::invalid_argument("OnOffPolicy: q must be in (0, 1]");
  }
};

namespace detail {

/// Weighted-nearest BS with `on` set, and its rank among all BSs.
inline std::pair<int, int> nearest_on(const Association& pre, const Snapshot& snap, const Region& region,
                                      const std::vector<std::uint8_t>& on, std::size_t u) {
  const NeighborTable& nt = *pre.neighbors;
  const std::int32_t* row = nt.row(u);
  for (int r = 0; r < nt.width; ++r)
    if (on[row[r]]) return {row[r], r + 1};
  // Every listed candidate is off: scan all BSs.
  const std::size_t nb = snap.bs_count();
  auto key = [&](std::size_t b) {
    return region.squared_distance(snap.user_x[u], snap.user_y[u], snap.bs_x[b], snap.bs_y[b]) * nt.inverse_w2[b];
  };
  int best = -1;
  double best_key = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    if (!on[b]) continue;
    const double k = key(b);
    if (best < 0 || k < best_key) {
      best = static_cast<int>(b);
      best_key = k;
    }
  }
  if (best < 0) throw TrialDiscarded("no base station remains active");
  int rank = 1;
  for (std::size_t b = 0; b < nb; ++b) {
    const double k = key(b);
    if (k < best_key || (k == best_key && static_cast<int>(b) < best)) ++rank;
  }
  return {best, rank};
}

}  // namespace detail

/// Switches BSs off and reassociates their users to the weighted-nearest BS
/// still on. Threshold decisions use the counts of `pre` only; reassociated
/// users never trigger another round.
inline Association apply_onoff(const Association& pre, const Snapshot& snap, const NetworkSpec& spec,
                               const Region& region, const OnOffPolicy& policy) {
  policy.validate(spec.tiers.size());
  const std::size_t nb = snap.bs_count();
  const std::size_t nu = snap.user_count();
  Association out;
  out.neighbors = pre.neighbors;
  out.active.assign(nb, 1);

  std::vector<std::uint8_t> on(nb, 1);
  if (policy.kind == PolicyKind::threshold) {
    for (std::size_t b = 0; b < nb; ++b) on[b] = pre.bs_user_count[b] > policy.thresholds[snap.bs_tier[b]];
  } else if (policy.kind == PolicyKind::random) {
    for (std::size_t b = 0; b < nb; ++b) on[b] = snap.bs_uniform[b] < policy.keep_probability;
  }
  if (std::find(on.begin(), on.end(), 1) == on.end()) throw TrialDiscarded("no base station remains active");

  out.serving_bs.resize(nu);
  out.order.resize(nu);
  out.bs_user_count.assign(nb, 0);
  for (std::size_t u = 0; u < nu; ++u) {
    const int s = pre.serving_bs[u];
    if (on[s] && pre.order[u] == 1) {
      out.serving_bs[u] = s;
      out.order[u] = 1;
    } else {
      const auto [b, rank] = detail::nearest_on(pre, snap, region, on, u);
      out.serving_bs[u] = b;
      out.order[u] = rank;
    }
    ++out.bs_user_count[out.serving_bs[u]];
  }

  if (policy.kind == PolicyKind::random) {
    // The thinned network also turns off BSs left without users.
    for (std::size_t b = 0; b < nb; ++b) on[b] = on[b] && out.bs_user_count[b] > 0;
    if (std::find(on.begin(), on.end(), 1) == on.end()) throw TrialDiscarded("no base station remains active");
  }
  out.active = std::move(on);
  return out;
}

}  // namespace onoffcov::sim
