#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "onoffcov/analytic.hpp"
#include "onoffcov/model.hpp"

namespace onoffcov {

enum class ThresholdMethod { closed_form, exhaustive };

inline std::string to_string(ThresholdMethod m) {
  return m == ThresholdMethod::closed_form ? "closed_form" : "exhaustive";
}

struct ThresholdResult {
  std::vector<int> thresholds;  ///< one per tier
  double achieved_coverage = 0.0;
  ThresholdMethod method = ThresholdMethod::closed_form;
  std::vector<std::pair<double, double>> derivative_trace;  ///< (theta, dPc/dtheta)
};

/// Closest integer to gamma, halves rounded up.
inline int optimal_threshold_closed(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("optimal_threshold_closed: gamma must be > 0");
  return static_cast<int>(std::floor(gamma + 0.5));
}

/// Below this many users per BS the normal approximation behind the
/// derivative and the closed-form rule is not trusted.
inline constexpr double kLargeGammaFloor = 5.0;

struct DerivativeValue {
  double value = 0.0;
  bool low_gamma = false;
};

/// d Pc / d theta of the normal-approximation coverage, theta real.
inline DerivativeValue coverage_derivative_approx(double target_sinr, double gamma, double theta, double alpha) {
  if (!(gamma > 0.0)) throw std::invalid_argument("coverage_derivative_approx: gamma must be > 0");
  const double r = rho(target_sinr, alpha);
  const ActivityProbs p = activity_probs_normal(theta, gamma);
  const double shift = (theta - gamma) / (2.0 * gamma);
  const double phi = std::exp(-((theta - gamma) * (theta - gamma) + 0.25) / (2.0 * gamma)) /
                     std::sqrt(2.0 * std::numbers::pi * gamma);
  const double on = 1.0 + p.active * r;
  const double bracket = std::exp(shift) * on - std::exp(-shift) * (1.0 + p.nearest * r);
  return {-phi / (on * on) * r / (1.0 + r) * bracket, gamma < kLargeGammaFloor};
}

/// argmax over theta in {0..theta_max} of the HomNet SIR coverage; ties go to the smaller theta.
inline ThresholdResult optimal_threshold_search(double target_sinr, double gamma, double alpha, int theta_max,
                                                OccupancyModel model = OccupancyModel::exact_gamma) {
  if (theta_max < 0) throw std::invalid_argument("optimal_threshold_search: theta_max must be >= 0");
  ThresholdResult out;
  out.method = ThresholdMethod::exhaustive;
  int best = 0;
  double best_value = -1.0;
  for (int theta = 0; theta <= theta_max; ++theta) {
    const double v = coverage_homnet_sir(target_sinr, gamma, theta, alpha, model);
    if (v > best_value) {
      best_value = v;
      best = theta;
    }
  }
  out.thresholds = {best};
  out.achieved_coverage = best_value;
  return out;
}

/// Closed-form rule with its coverage and the derivative evaluated at integers 0..theta_max.
inline ThresholdResult optimal_threshold_closed_result(double target_sinr, double gamma, double alpha, int theta_max,
                                                       OccupancyModel model = OccupancyModel::exact_gamma) {
  ThresholdResult out;
  out.method = ThresholdMethod::closed_form;
  const int theta = optimal_threshold_closed(gamma);
  out.thresholds = {theta};
  out.achieved_coverage = coverage_homnet_sir(target_sinr, gamma, theta, alpha, model);
  for (int t = 0; t <= theta_max; ++t)
    out.derivative_trace.emplace_back(t, coverage_derivative_approx(target_sinr, gamma, t, alpha).value);
  return out;
}

enum class HetnetSearch { closed_form, coordinate_ascent, full_grid };

namespace detail {

inline double hetnet_value(NetworkSpec spec, const std::vector<int>& thresholds, OccupancyModel model) {
  for (std::size_t i = 0; i < thresholds.size(); ++i) spec.tiers[i].threshold = thresholds[i];
  return coverage_hetnet_sir(spec, model);
}

inline int default_theta_max(const DerivedRatios& ratios) {
  double top = 0.0;
  for (double g : ratios.weighted_ratio) top = std::max(top, g);
  return static_cast<int>(std::ceil(3.0 * top)) + 10;
}

}  // namespace detail

/// Per-tier thresholds for a HetNet. theta_max < 0 picks a bound from the weighted ratios.
inline ThresholdResult optimal_thresholds_hetnet(const NetworkSpec& spec,
                                                 OccupancyModel model = OccupancyModel::exact_gamma,
                                                 HetnetSearch search = HetnetSearch::closed_form, int theta_max = -1) {
  const DerivedRatios ratios = derive_ratios(spec);
  const std::size_t k = spec.tiers.size();
  if (theta_max < 0) theta_max = detail::default_theta_max(ratios);
  ThresholdResult out;

  if (search == HetnetSearch::closed_form) {
    out.method = ThresholdMethod::closed_form;
    for (double g : ratios.weighted_ratio) out.thresholds.push_back(optimal_threshold_closed(g));
    out.achieved_coverage = detail::hetnet_value(spec, out.thresholds, model);
    return out;
  }

  out.method = ThresholdMethod::exhaustive;
  std::vector<int> current(k, 0);
  double best = detail::hetnet_value(spec, current, model);

  if (search == HetnetSearch::full_grid) {
    // Odometer over {0..theta_max}^K, lexicographic so ties keep the earliest point.
    std::vector<int> probe(k, 0);
    while (true) {
      std::size_t i = 0;
      while (i < k && probe[i] == theta_max) probe[i++] = 0;
      if (i == k) break;
      ++probe[i];
      const double v = detail::hetnet_value(spec, probe, model);
      if (v > best) {
        best = v;
        current = probe;
      }
    }
  } else {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i < k; ++i) {
        std::vector<int> probe = current;
        for (int t = 0; t <= theta_max; ++t) {
          if (t == current[i]) continue;
          probe[i] = t;
          const double v = detail::hetnet_value(spec, probe, model);
          if (v > best) {
            best = v;
            current = probe;
            improved = true;
          }
        }
      }
    }
  }
  out.thresholds = current;
  out.achieved_coverage = best;
  return out;
}

}  // namespace onoffcov
