#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "onoffcov/model.hpp"
#include "onoffcov/sim/philox.hpp"

namespace onoffcov::sim {

/// A trial that cannot be evaluated (no BS in a tier, nobody left on).
class TrialDiscarded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Boundary { torus, inner_window };

struct Region {
  double width = 3000.0;   ///< m
  double height = 3000.0;  ///< m
  Boundary boundary = Boundary::torus;
  double margin = 500.0;  ///< m, inner_window only

  double area() const { return width * height; }

  void validate() const {
    if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("Region: width and height must be > 0");
    if (boundary == Boundary::inner_window && !(margin >= 0.0 && margin < 0.5 * std::min(width, height)))
      throw std::invalid_argument("Region: margin must be in [0, min(width, height)/2)");
  }

  /// Whether a user at (x, y) contributes coverage samples.
  bool measured(double x, double y) const {
    if (boundary == Boundary::torus) return true;
    return x > margin && x < width - margin && y > margin && y < height - margin;
  }

  double squared_distance(double x0, double y0, double x1, double y1) const {
    double dx = std::fabs(x0 - x1);
    double dy = std::fabs(y0 - y1);
    if (boundary == Boundary::torus) {
      if (dx > 0.5 * width) dx = width - dx;
      if (dy > 0.5 * height) dy = height - dy;
    }
    return dx * dx + dy * dy;
  }
};

inline std::string to_string(Boundary b) { return b == Boundary::torus ? "torus" : "inner_window"; }

struct Snapshot {
  std::vector<double> bs_x, bs_y;
  std::vector<int> bs_tier;
  std::vector<double> bs_uniform;  ///< per-BS U(0,1) for random on/off
  std::vector<double> user_x, user_y;
  std::uint64_t master_seed = 0;
  std::uint32_t trial = 0;

  std::size_t bs_count() const { return bs_x.size(); }
  std::size_t user_count() const { return user_x.size(); }
};

namespace detail {

inline long long poisson_count(PhiloxEngine& eng, double mean) {
  std::poisson_distribution<long long> dist(mean);
  return dist(eng);
}

inline void place_uniform(PhiloxEngine& eng, long long count, const Region& region, std::vector<double>& xs,
                          std::vector<double>& ys) {
  for (long long i = 0; i < count; ++i) {
    xs.push_back(eng.uniform() * region.width);
    ys.push_back(eng.uniform() * region.height);
  }
}

}  // namespace detail

/// BS layer only: per tier a Poisson count placed uniformly.
inline void sample_base_stations(const NetworkSpec& spec, const Region& region, std::uint64_t master_seed,
                                 std::uint32_t trial, Snapshot& out) {
  for (std::size_t i = 0; i < spec.tiers.size(); ++i) {
    PhiloxEngine eng(master_seed, static_cast<std::uint32_t>(i), trial, Purpose::bs_placement);
    const long long n = detail::poisson_count(eng, spec.tiers[i].bs_density * region.area());
    if (n == 0) throw TrialDiscarded("tier " + std::to_string(i) + " drew no base stations");
    detail::place_uniform(eng, n, region, out.bs_x, out.bs_y);
    out.bs_tier.insert(out.bs_tier.end(), static_cast<std::size_t>(n), static_cast<int>(i));
  }
  const std::size_t total = out.bs_x.size();
  out.bs_uniform.resize(total);
  const auto key = philox_key(master_seed);
  for (std::size_t b = 0; b < total; b += 4) {
    const auto block = Philox4x32::apply(
        make_counter(static_cast<std::uint32_t>(b / 4), 0, trial, Purpose::onoff_uniform), key);
    for (std::size_t j = 0; j < 4 && b + j < total; ++j) out.bs_uniform[b + j] = u01_open(block[j]);
  }
}

/// One realization of the BS tiers and the users. Identical for identical
/// (master_seed, trial).
inline Snapshot sample_snapshot(const NetworkSpec& spec, const Region& region, std::uint64_t master_seed,
                                std::uint32_t trial) {
  spec.validate();
  region.validate();
  Snapshot snap;
  snap.master_seed = master_seed;
  snap.trial = trial;
  sample_base_stations(spec, region, master_seed, trial, snap);
  PhiloxEngine eng(master_seed, 0, trial, Purpose::user_placement);
  detail::place_uniform(eng, detail::poisson_count(eng, spec.user_density * region.area()), region, snap.user_x,
                        snap.user_y);
  return snap;
}

}  // namespace onoffcov::sim
