#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace onoffcov {

#ifndef ONOFFCOV_GAMMA_SHAPE
#define ONOFFCOV_GAMMA_SHAPE 3.575
#endif

/// Shape parameter of the gamma fit to the area of a typical Poisson-Voronoi cell.
inline constexpr double kVoronoiGammaShape = ONOFFCOV_GAMMA_SHAPE;

/// One tier of base stations.
struct TierSpec {
  double bs_density = 0.0;  ///< BSs per m^2
  double tx_power = 1.0;    ///< W
  int threshold = 0;        ///< a BS with <= threshold users is switched off
};

struct NetworkSpec {
  std::vector<TierSpec> tiers;
  double user_density = 0.0;  ///< users per m^2
  double pathloss_exponent = 4.0;
  double noise_power = 0.0;  ///< W; 0 selects the interference-limited (SIR) regime
  double target_sinr = 1.0;  ///< linear

  bool interference_limited() const { return noise_power == 0.0; }

  void validate() const {
    if (tiers.empty()) throw std::invalid_argument("NetworkSpec: at least one tier required");
    for (std::size_t i = 0; i < tiers.size(); ++i) {
      const auto& t = tiers[i];
      const std::string where = "NetworkSpec: tier " + std::to_string(i) + ": ";
      if (!(t.bs_density > 0.0)) throw std::invalid_argument(where + "bs_density must be > 0");
      if (!(t.tx_power > 0.0)) throw std::invalid_argument(where + "tx_power must be > 0");
      if (t.threshold < 0) throw std::invalid_argument(where + "threshold must be >= 0");
    }
    if (!(user_density > 0.0)) throw std::invalid_argument("NetworkSpec: user_density must be > 0");
    if (!(pathloss_exponent > 2.0))
      throw std::invalid_argument("NetworkSpec: pathloss_exponent must be > 2");
    if (!(noise_power >= 0.0)) throw std::invalid_argument("NetworkSpec: noise_power must be >= 0");
    if (!(target_sinr > 0.0)) throw std::invalid_argument("NetworkSpec: target_sinr must be > 0");
  }
};

/// Model for the number of users attached to a typical BS.
enum class OccupancyModel {
  exact_gamma,  ///< negative-binomial law from the gamma cell-area fit
  poisson,      ///< users in an area of 1/lambda_b
  normal,       ///< continuity-corrected normal approximation of the Poisson law (CDF only)
};

inline std::string to_string(OccupancyModel model) {
  switch (model) {
    case OccupancyModel::exact_gamma:
      return "exact_gamma";
    case OccupancyModel::poisson:
      return "poisson";
    case OccupancyModel::normal:
      return "normal";
  }
  return "unknown";
}

/// Dimensionless quantities shared by the analysis and the simulator.
struct DerivedRatios {
  double gamma = 0.0;                   ///< lambda_u / sum_i lambda_i
  std::vector<double> weights;          ///< P_{t,i}^{1/alpha}
  std::vector<double> tier_probability; ///< q_i, association probability of tier i
  std::vector<double> weighted_density; ///< lambda_i / q_i
  std::vector<double> weighted_ratio;   ///< lambda_u / weighted_density_i
};

/// Weighted-distance association ratios. Scale-free in the transmit powers.
inline DerivedRatios derive_ratios(const NetworkSpec& spec) {
  spec.validate();
  DerivedRatios out;
  const std::size_t k = spec.tiers.size();
  out.weights.resize(k);
  out.tier_probability.resize(k);
  out.weighted_density.resize(k);
  out.weighted_ratio.resize(k);

  // Normalize powers by the largest one so that w_i^2 stays O(1).
  double max_power = 0.0;
  for (const auto& t : spec.tiers) max_power = std::max(max_power, t.tx_power);
  std::vector<double> mass(k);
  double total_density = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& t = spec.tiers[i];
    out.weights[i] = std::pow(t.tx_power, 1.0 / spec.pathloss_exponent);
    const double w2 = std::pow(t.tx_power / max_power, 2.0 / spec.pathloss_exponent);
    mass[i] = t.bs_density * w2;
    total_density += t.bs_density;
  }
  const double total_mass = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double q = k == 1 ? 1.0 : mass[i] / total_mass;
    out.tier_probability[i] = q;
    out.weighted_density[i] = spec.tiers[i].bs_density / q;
    out.weighted_ratio[i] = spec.user_density * q / spec.tiers[i].bs_density;
  }
  out.gamma = spec.user_density / total_density;
  return out;
}

/// Transmit-power scaling applied when BSs are switched off.
struct PowerControl {
  double base_power = 1.0;  ///< W, power before on/off control
  double beta = 1.0;

  double transmit_power() const { return beta * base_power; }
};

/// beta = p_a^{-alpha/2}: keeps the cell-edge SNR after thinning with activity p_a.
inline double power_control_beta(double active_probability, double pathloss_exponent) {
  if (!(active_probability > 0.0) || active_probability > 1.0)
    throw std::invalid_argument("power_control_beta: active probability must be in (0, 1]");
  return std::pow(active_probability, -0.5 * pathloss_exponent);
}

/// Distance within which 95% of users find their nearest BS.
inline double cell_edge_distance(double bs_density) {
  if (!(bs_density > 0.0)) throw std::invalid_argument("cell_edge_distance: density must be > 0");
  return std::sqrt(-std::log(0.05) / (std::numbers::pi * bs_density));
}

/// Base transmit power giving a cell-edge SNR 10 dB above the target SINR.
inline double cell_edge_base_power(double bs_density, double pathloss_exponent, double noise_power,
                                   double target_sinr) {
  const double edge_snr = 10.0 * target_sinr;
  return edge_snr * std::pow(cell_edge_distance(bs_density), pathloss_exponent) * noise_power;
}

}  // namespace onoffcov
