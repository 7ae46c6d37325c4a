#pragma once

// Closed-form and integral coverage expressions for threshold-based BS on/off
// control, single tier (HomNet) and K tiers (HetNet).

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "onoffcov/model.hpp"
#include "onoffcov/specialfn.hpp"

namespace onoffcov {

/// Activity probabilities produced by an on/off policy.
struct ActivityProbs {
  double active = 1.0;       ///< p_a: a BS stays on
  double nearest = 1.0;      ///< p_1: a user is served by its nearest BS
  double not_nearest = 0.0;  ///< p_1c = 1 - p_1
};

/// q-weighted averages over tiers together with the per-tier values.
struct HetActivity {
  ActivityProbs average;
  std::vector<ActivityProbs> per_tier;
  std::vector<double> tier_probability;
};

/// P(N = m | gamma): users attached to a typical BS.
inline double occupancy_pmf(int m, double gamma, OccupancyModel model) {
  if (m < 0) throw std::invalid_argument("occupancy_pmf: m must be >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("occupancy_pmf: gamma must be > 0");
  switch (model) {
    case OccupancyModel::exact_gamma: {
      constexpr double k = kVoronoiGammaShape;
      return std::exp(std::lgamma(m + k) - std::lgamma(k) - std::lgamma(m + 1.0) -
                      m * std::log1p(k / gamma) - k * std::log1p(gamma / k));
    }
    case OccupancyModel::poisson:
      return std::exp(m * std::log(gamma) - gamma - std::lgamma(m + 1.0));
    case OccupancyModel::normal:
      break;
  }
  throw std::invalid_argument("occupancy_pmf: the normal model is only defined through its CDF");
}

/// Continuity-corrected normal approximation with a real-valued threshold.
inline ActivityProbs activity_probs_normal(double theta, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("activity_probs: gamma must be > 0");
  const double sd = std::sqrt(gamma);
  ActivityProbs p;
  p.active = normal_cdf(-(theta + 0.5 - gamma) / sd);
  p.nearest = normal_cdf(-(theta - 0.5 - gamma) / sd);
  p.not_nearest = normal_cdf((theta - 0.5 - gamma) / sd);
  return p;
}

inline ActivityProbs activity_probs(int theta, double gamma, OccupancyModel model) {
  if (theta < 0) throw std::invalid_argument("activity_probs: theta must be >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("activity_probs: gamma must be > 0");
  if (model == OccupancyModel::normal) return activity_probs_normal(theta, gamma);

  double below = 0.0;     // P(N <= theta)
  double displaced = 0.0; // sum_{m=1}^{theta} m P(N = m)
  for (int m = 0; m <= theta; ++m) {
    const double pm = occupancy_pmf(m, gamma, model);
    below += pm;
    displaced += m * pm;
  }
  ActivityProbs p;
  p.active = std::max(0.0, 1.0 - below);
  p.not_nearest = displaced / gamma;
  if (p.not_nearest > 1.0 + 1e-12)
    throw NumericalError("activity_probs: displaced-user probability exceeds 1");
  p.not_nearest = std::min(p.not_nearest, 1.0);
  p.nearest = 1.0 - p.not_nearest;
  return p;
}

/// Probability that a user is served by its n-th nearest BS.
inline double order_pmf(int n, const ActivityProbs& probs) {
  if (n < 1) throw std::invalid_argument("order_pmf: n must be >= 1");
  if (n == 1) return 1.0 - probs.not_nearest;
  return probs.not_nearest * std::pow(1.0 - probs.active, n - 2) * probs.active;
}

namespace detail {

inline double rho_uncached(double target_sinr, double alpha) {
  const double k = 0.5 * alpha;
  const double scale = std::pow(target_sinr, 2.0 / alpha);
  const double lower = 1.0 / scale;  // T^{-2/alpha}
  constexpr auto spec = QuadratureSpec::precise();
  if (lower <= 1.0) {
    // int_lower^inf = int_0^inf - int_0^lower, with int_0^inf du/(1+u^k) = (pi/k)/sin(pi/k).
    const double whole = (std::numbers::pi / k) / std::sin(std::numbers::pi / k);
    const double head = integrate([k](double u) { return 1.0 / (1.0 + std::pow(u, k)); }, 0.0, lower, spec);
    return scale * (whole - head);
  }
  // u = y^{-1/(k-1)} maps [lower, inf) onto a finite interval with a smooth integrand.
  const double upper = std::pow(lower, 1.0 - k);
  const double p = k / (k - 1.0);
  const double tail = integrate([p](double y) { return 1.0 / (1.0 + std::pow(y, p)); }, 0.0, upper, spec);
  return scale * tail / (k - 1.0);
}

}  // namespace detail

/// Memo table for rho(T, alpha). Reads are shared, inserts are exclusive; the
/// stored value does not depend on which thread computed it.
class RhoCache {
 public:
  double get(double target_sinr, double alpha) {
    const Key key{target_sinr, alpha};
    {
      std::shared_lock lock(mutex_);
      if (auto it = table_.find(key); it != table_.end()) return it->second;
    }
    const double value = detail::rho_uncached(target_sinr, alpha);
    std::unique_lock lock(mutex_);
    return table_.emplace(key, value).first->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return table_.size();
  }

 private:
  using Key = std::pair<double, double>;
  mutable std::shared_mutex mutex_;
  std::map<Key, double> table_;
};

inline RhoCache& rho_cache() {
  static RhoCache cache;
  return cache;
}

/// rho(T, alpha) = T^{2/alpha} int_{T^{-2/alpha}}^inf du / (1 + u^{alpha/2}).
inline double rho(double target_sinr, double alpha) {
  if (!(target_sinr > 0.0)) throw std::invalid_argument("rho: T must be > 0");
  if (!(alpha > 2.0)) throw std::invalid_argument("rho: alpha must be > 2");
  return rho_cache().get(target_sinr, alpha);
}

/// Closed form of rho at alpha = 4.
inline double rho_alpha4(double target_sinr) {
  const double root = std::sqrt(target_sinr);
  return root * (std::numbers::pi / 2.0 - std::atan(1.0 / root));
}

/// Coverage of a user served by its n-th nearest BS at density `density`,
/// interferers thinned to `active_probability`. snr = P_t / sigma^2; pass
/// +infinity for the interference-limited case.
inline double coverage_cond_n(double target_sinr, double alpha, double density, double active_probability,
                              double snr, int n, const QuadratureSpec& spec = {}) {
  if (n < 1) throw std::invalid_argument("coverage_cond_n: n must be >= 1");
  if (!(density > 0.0)) throw std::invalid_argument("coverage_cond_n: density must be > 0");
  if (!(snr > 0.0)) throw std::invalid_argument("coverage_cond_n: snr must be > 0");
  const double decay = 1.0 + active_probability * rho(target_sinr, alpha);
  // Dimensionless variable s = pi * density * r^2.
  const double noise_scale = std::isinf(snr) ? 0.0 : target_sinr / (snr * std::pow(std::numbers::pi * density, 0.5 * alpha));
  const double log_norm = std::lgamma(static_cast<double>(n));
  auto integrand = [&](double s) {
    if (s <= 0.0) return n == 1 ? std::exp(-log_norm) : 0.0;
    const double noise = noise_scale == 0.0 ? 0.0 : noise_scale * std::pow(s, 0.5 * alpha);
    return std::exp((n - 1) * std::log(s) - decay * s - noise - log_norm);
  };
  return integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), spec);
}

/// alpha = 4 evaluation of coverage_cond_n through D_{-n}:
/// (pi lambda)^n (2T/SNR)^{-n/2} e^{z^2/4} D_{-n}(z), z = pi lambda kappa / sqrt(2T/SNR).
inline double coverage_cond_n_alpha4(double target_sinr, double density, double active_probability, double snr,
                                     int n) {
  if (n < 1) throw std::invalid_argument("coverage_cond_n_alpha4: n must be >= 1");
  if (!(snr > 0.0) || !std::isfinite(snr))
    throw std::invalid_argument("coverage_cond_n_alpha4: snr must be positive and finite");
  const double kappa = 1.0 + active_probability * rho_alpha4(target_sinr);
  const double width = std::sqrt(2.0 * target_sinr / snr);
  const double z = std::numbers::pi * density * kappa / width;
  return std::exp(n * (std::log(z) - std::log(kappa)) + log_parabolic_cylinder_d_scaled(-n, z));
}

/// Overall interference-limited coverage for given activity probabilities.
inline double coverage_sir(double target_sinr, double alpha, const ActivityProbs& probs) {
  const double r = rho(target_sinr, alpha);
  return (1.0 + probs.nearest * r) / ((1.0 + r) * (1.0 + probs.active * r));
}

/// Interference-limited HomNet coverage under threshold theta; depends on the
/// densities only through gamma = lambda_u / lambda_b.
inline double coverage_homnet_sir(double target_sinr, double gamma, int theta, double alpha,
                                  OccupancyModel model = OccupancyModel::exact_gamma) {
  return coverage_sir(target_sinr, alpha, activity_probs(theta, gamma, model));
}

/// Active probability of random on/off with keep probability q: the thinned
/// network still switches off BSs without users.
inline double random_active_probability(double gamma, double keep_probability, OccupancyModel model) {
  if (!(keep_probability > 0.0) || keep_probability > 1.0)
    throw std::invalid_argument("random on/off: q must be in (0, 1]");
  return activity_probs(0, gamma / keep_probability, model).active;
}

inline double coverage_random(double target_sinr, double gamma, double keep_probability, double alpha,
                              OccupancyModel model = OccupancyModel::exact_gamma) {
  const double active = random_active_probability(gamma, keep_probability, model);
  return 1.0 / (1.0 + active * rho(target_sinr, alpha));
}

/// Per-tier activity on (theta_i, gamma_bar_i) and its q-weighted average.
inline HetActivity hetnet_activity(const NetworkSpec& spec, OccupancyModel model) {
  const DerivedRatios ratios = derive_ratios(spec);
  HetActivity out;
  out.tier_probability = ratios.tier_probability;
  double active = 0.0;
  double not_nearest = 0.0;
  for (std::size_t i = 0; i < spec.tiers.size(); ++i) {
    const ActivityProbs p = activity_probs(spec.tiers[i].threshold, ratios.weighted_ratio[i], model);
    out.per_tier.push_back(p);
    active += ratios.tier_probability[i] * p.active;
    not_nearest += ratios.tier_probability[i] * p.not_nearest;
  }
  out.average.active = active;
  out.average.not_nearest = not_nearest;
  out.average.nearest = 1.0 - not_nearest;
  return out;
}

/// Interference-limited HetNet coverage with the per-tier thresholds in `spec`.
inline double coverage_hetnet_sir(const NetworkSpec& spec, OccupancyModel model = OccupancyModel::exact_gamma) {
  return coverage_sir(spec.target_sinr, spec.pathloss_exponent, hetnet_activity(spec, model).average);
}

/// HetNet coverage given service by the n-th nearest (weighted) BS: a q-weighted
/// sum of HomNets at the weighted densities, thinned by the average activity.
/// snr = P_t / sigma^2 (+infinity for SIR).
inline double coverage_hetnet_cond_n(const NetworkSpec& spec, double snr, int n,
                                     OccupancyModel model = OccupancyModel::exact_gamma) {
  const DerivedRatios ratios = derive_ratios(spec);
  const double active = hetnet_activity(spec, model).average.active;
  const double alpha = spec.pathloss_exponent;
  double total = 0.0;
  for (std::size_t i = 0; i < spec.tiers.size(); ++i) {
    const double per_tier =
        alpha == 4.0 && std::isfinite(snr)
            ? coverage_cond_n_alpha4(spec.target_sinr, ratios.weighted_density[i], active, snr, n)
            : coverage_cond_n(spec.target_sinr, alpha, ratios.weighted_density[i], active, snr, n);
    total += ratios.tier_probability[i] * per_tier;
  }
  return total;
}

/// PDF of the distance to the n-th nearest point of a PPP with the given density.
inline double nth_distance_pdf(double r, int n, double density) {
  if (!(r > 0.0)) throw std::invalid_argument("nth_distance_pdf: r must be > 0");
  if (n < 1) throw std::invalid_argument("nth_distance_pdf: n must be >= 1");
  if (!(density > 0.0)) throw std::invalid_argument("nth_distance_pdf: density must be > 0");
  const double mass = density * std::numbers::pi * r * r;
  return 2.0 * std::exp(n * std::log(mass) - mass - std::log(r) - std::lgamma(static_cast<double>(n)));
}

/// P(R_n >= r): fewer than n points in the disc of radius r.
inline double nth_distance_ccdf(double r, int n, double density) {
  return regularized_upper_gamma(n, density * std::numbers::pi * r * r);
}

}  // namespace onoffcov
