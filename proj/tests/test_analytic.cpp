#include <cmath>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "onoffcov/analytic.hpp"

using namespace onoffcov;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr auto kExact = OccupancyModel::exact_gamma;
constexpr auto kPoisson = OccupancyModel::poisson;

NetworkSpec homnet(double lb, double lu, int theta) {
  NetworkSpec s;
  s.tiers = {{lb, 1.0, theta}};
  s.user_density = lu;
  return s;
}

NetworkSpec hetnet_scenario(int t1, int t2) {
  NetworkSpec s;
  s.tiers = {{1e-4, 10.0, t1}, {1e-3, 1.0, t2}};
  s.user_density = 1e-3 / 0.2402530733520422;
  return s;
}

// Series form of the overall coverage: sum_n (1 + p_a rho)^{-n} p_n.
double coverage_series(double t, double alpha, const ActivityProbs& p, int terms) {
  const double decay = 1.0 / (1.0 + p.active * rho(t, alpha));
  double sum = 0.0;
  double pow_n = 1.0;
  for (int n = 1; n <= terms; ++n) {
    pow_n *= decay;
    sum += pow_n * order_pmf(n, p);
  }
  return sum;
}

}  // namespace

TEST(OccupancyPmf, Examples) {
  EXPECT_NEAR(occupancy_pmf(0, 10.0, kExact), 0.008480411829274235, 1e-16);
  EXPECT_NEAR(occupancy_pmf(0, 10.0, kPoisson), 4.5399929762484854e-05, 1e-19);
  EXPECT_THROW(occupancy_pmf(3, 10.0, OccupancyModel::normal), std::invalid_argument);
  EXPECT_THROW(occupancy_pmf(-1, 10.0, kExact), std::invalid_argument);
  EXPECT_THROW(occupancy_pmf(1, 0.0, kExact), std::invalid_argument);
}

TEST(OccupancyPmf, Normalization) {
  for (double g : {0.3, 1.0, 10.0, 47.0}) {
    for (auto m : {kExact, kPoisson}) {
      double sum = 0.0, mean = 0.0;
      for (int k = 0; k <= 5000; ++k) {
        const double p = occupancy_pmf(k, g, m);
        sum += p;
        mean += k * p;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
      EXPECT_NEAR(mean, g, 1e-9 * g);
    }
  }
}

TEST(ActivityProbs, ThetaZero) {
  const auto p = activity_probs(0, 10.0, kExact);
  EXPECT_EQ(p.not_nearest, 0.0);
  EXPECT_EQ(p.nearest, 1.0);
  EXPECT_NEAR(p.active, 0.991519588170726, 1e-14);
}

TEST(ActivityProbs, ReferenceValues) {
  struct Row { int theta; OccupancyModel m; double pa, p1; };
  const Row rows[] = {
      {5, kExact, 0.748034768661487, 0.915022667053171},   {5, kPoisson, 0.932914037120968, 0.970747311923039},
      {11, kExact, 0.340347267208887, 0.574267642060219},  {11, kPoisson, 0.303223853696893, 0.416960249807015},
      {19, kExact, 0.0779207018050206, 0.187957100563487}, {19, kPoisson, 0.00345434197585681, 0.00718650460385433},
  };
  for (const auto& r : rows) {
    const auto p = activity_probs(r.theta, 10.0, r.m);
    EXPECT_NEAR(p.active, r.pa, 1e-13) << r.theta;
    EXPECT_NEAR(p.nearest, r.p1, 1e-13) << r.theta;
    EXPECT_DOUBLE_EQ(p.nearest + p.not_nearest, 1.0);
  }
}

TEST(ActivityProbs, PoissonIdentity) {
  for (double g : {2.0, 10.0, 23.5})
    for (int th = 0; th < 40; ++th) {
      const auto p = activity_probs(th, g, kPoisson);
      EXPECT_NEAR(p.nearest, p.active + occupancy_pmf(th, g, kPoisson), 1e-13);
    }
}

TEST(ActivityProbs, Ordering) {
  for (auto m : {kExact, kPoisson, OccupancyModel::normal})
    for (double g : {0.5, 3.0, 10.0, 30.0})
      for (int th = 0; th < 60; ++th) {
        const auto p = activity_probs(th, g, m);
        EXPECT_GE(p.active, 0.0);
        EXPECT_LE(p.active, p.nearest + 1e-15);
        EXPECT_LE(p.nearest, 1.0);
      }
}

TEST(ActivityProbs, NormalApproximationUsesContinuityCorrection) {
  const auto p = activity_probs(10, 10.0, OccupancyModel::normal);
  EXPECT_NEAR(p.active, 1.0 - normal_cdf(0.5 / std::sqrt(10.0)), 1e-15);
  EXPECT_NEAR(p.nearest, 1.0 - normal_cdf(-0.5 / std::sqrt(10.0)), 1e-15);
  // Close to the Poisson values it approximates.
  const auto q = activity_probs(10, 10.0, kPoisson);
  EXPECT_NEAR(p.active, q.active, 0.03);
  EXPECT_NEAR(p.nearest, q.nearest, 0.03);
}

TEST(OrderPmf, Examples) {
  ActivityProbs p{0.5, 0.8, 0.2};
  EXPECT_NEAR(order_pmf(3, p), 0.05, 1e-16);
  EXPECT_DOUBLE_EQ(order_pmf(1, p), 0.8);
  ActivityProbs all_on{1.0, 0.7, 0.3};
  EXPECT_DOUBLE_EQ(order_pmf(2, all_on), 0.3);
  EXPECT_EQ(order_pmf(3, all_on), 0.0);
  EXPECT_THROW(order_pmf(0, p), std::invalid_argument);
}

TEST(OrderPmf, SumsToOne) {
  for (int th : {0, 4, 10, 19}) {
    const auto p = activity_probs(th, 10.0, kExact);
    double s = 0.0;
    for (int n = 1; n < 3000; ++n) s += order_pmf(n, p);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Rho, Examples) {
  EXPECT_NEAR(rho(1.0, 4.0), std::numbers::pi / 4.0, 1e-12);
  EXPECT_NEAR(rho(10.0, 4.0), 3.9987600505576615, 1e-12);
  EXPECT_LT(rho(1e-8, 4.0), 1e-7);
  EXPECT_GT(rho(1e-8, 4.0), 0.0);
}

TEST(Rho, MatchesClosedFormAtAlpha4) {
  for (double t = 1e-3; t < 1e3; t *= 1.37) EXPECT_NEAR(rho(t, 4.0), rho_alpha4(t), 1e-10) << t;
}

TEST(Rho, OtherExponents) {
  EXPECT_NEAR(rho(1.0, 3.0), 1.6712976965294422, 1e-11);
  EXPECT_NEAR(rho(2.0, 3.5), 1.8769604242462277, 1e-11);
  EXPECT_NEAR(rho(0.5, 5.0), 0.2850516806359599, 1e-11);
}

TEST(Rho, MonotoneInT) {
  for (double alpha : {2.5, 3.0, 4.0, 6.0}) {
    double prev = 0.0;
    for (double t = 1e-3; t < 1e3; t *= 1.5) {
      const double r = rho(t, alpha);
      EXPECT_GT(r, prev);
      prev = r;
    }
  }
}

TEST(Rho, RejectsBadInput) {
  EXPECT_THROW(rho(0.0, 4.0), std::invalid_argument);
  EXPECT_THROW(rho(1.0, 2.0), std::invalid_argument);
}

TEST(RhoCache, ConcurrentReadersAgree) {
  RhoCache cache;
  std::vector<std::vector<double>> seen(4);
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w)
    pool.emplace_back([&, w] {
      for (int i = 0; i < 50; ++i) seen[w].push_back(cache.get(0.1 * (1 + i % 10), 3.0 + 0.25 * (i % 3)));
    });
  for (auto& t : pool) t.join();
  for (int w = 1; w < 4; ++w) EXPECT_EQ(seen[w], seen[0]);
  EXPECT_EQ(cache.size(), 30u);
}

TEST(CoverageCondN, Examples) {
  EXPECT_NEAR(coverage_cond_n(1.0, 4.0, 1e-4, 1.0, kInf, 1), 1.0 / (1.0 + std::numbers::pi / 4.0), 1e-9);
  EXPECT_NEAR(coverage_cond_n(1.0, 4.0, 1e-4, 0.7, 1e8, 2), 0.33992368426801634, 1e-8);
  EXPECT_NEAR(coverage_cond_n(2.0, 3.5, 1e-4, 0.5, 1e7, 3), 0.0806415269292226, 1e-8);
}

TEST(CoverageCondN, InterferenceLimitedLimit) {
  for (double t : {0.3, 1.0, 4.0})
    for (double pa : {0.0, 0.4, 1.0})
      for (int n = 1; n <= 6; ++n) {
        const double want = std::pow(1.0 + pa * rho(t, 3.7), -n);
        EXPECT_NEAR(coverage_cond_n(t, 3.7, 2e-4, pa, kInf, n), want, 1e-9);
        EXPECT_NEAR(coverage_cond_n(t, 3.7, 2e-4, pa, 1e16, n), want, 1e-6);
      }
}

TEST(CoverageCondNAlpha4, MatchesQuadrature) {
  for (double t : {0.5, 1.0, 2.0})
    for (int n = 1; n <= 5; ++n)
      for (double snr : {1e6, 1e8, 1e10})
        for (double pa : {0.3, 1.0}) {
          const double a = coverage_cond_n_alpha4(t, 1e-4, pa, snr, n);
          const double q = coverage_cond_n(t, 4.0, 1e-4, pa, snr, n, QuadratureSpec::precise());
          EXPECT_NEAR(a, q, 1e-6) << t << " " << n << " " << snr;
        }
}

TEST(CoverageCondNAlpha4, FirstOrderUsesQFunction) {
  const double t = 1.0, lam = 1e-4, pa = 0.6, snr = 1e8;
  const double kappa = 1.0 + pa * rho_alpha4(t);
  const double z = std::numbers::pi * lam * kappa / std::sqrt(2.0 * t / snr);
  const double q = 0.5 * std::erfc(z / std::numbers::sqrt2);
  const double want = z / kappa * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z) * q;
  EXPECT_NEAR(coverage_cond_n_alpha4(t, lam, pa, snr, 1), want, 1e-12);
}

TEST(CoverageCondNAlpha4, NoInterferenceLeavesNoiseOnly) {
  // p_a = 0 gives kappa = 1: only the noise term remains.
  const double t = 1.0, lam = 1e-4, snr = 1e7;
  const double got = coverage_cond_n_alpha4(t, lam, 0.0, snr, 1);
  const double direct = integrate(
      [&](double v) { return std::numbers::pi * lam * std::exp(-std::numbers::pi * lam * v - t * v * v / snr); }, 0.0,
      kInf, QuadratureSpec::precise());
  EXPECT_NEAR(got, direct, 1e-10);
  EXPECT_THROW(coverage_cond_n_alpha4(t, lam, 0.0, kInf, 1), std::invalid_argument);
}

TEST(CoverageHomnetSir, Examples) {
  EXPECT_NEAR(coverage_sir(1.0, 4.0, {1.0, 1.0, 0.0}), 1.0 / (1.0 + std::numbers::pi / 4.0), 1e-15);
  EXPECT_NEAR(coverage_homnet_sir(1.0, 10.0, 0, 4.0), 0.562196450048744, 1e-12);
  EXPECT_NEAR(coverage_homnet_sir(1.0, 10.0, 5, 4.0), 0.606371834026002, 1e-12);
  EXPECT_NEAR(coverage_homnet_sir(1.0, 10.0, 11, 4.0), 0.641296274716016, 1e-12);
  EXPECT_NEAR(coverage_homnet_sir(1.0, 10.0, 19, 4.0, kPoisson), 0.561736492853797, 1e-12);
}

TEST(CoverageHomnetSir, EqualsSeries) {
  for (double t : {0.5, 1.0, 3.0})
    for (double g : {10.0, 20.0})
      for (int th : {0, 3, 10, 19}) {
        const auto p = activity_probs(th, g, kExact);
        EXPECT_NEAR(coverage_homnet_sir(t, g, th, 4.0), coverage_series(t, 4.0, p, 500), 1e-9);
      }
}

TEST(CoverageHomnetSir, DependsOnDensitiesOnlyThroughGamma) {
  const NetworkSpec a = homnet(1e-4, 1e-3, 7);
  const NetworkSpec b = homnet(2e-4, 2e-3, 7);
  EXPECT_EQ(coverage_homnet_sir(1.0, derive_ratios(a).gamma, 7, 4.0),
            coverage_homnet_sir(1.0, derive_ratios(b).gamma, 7, 4.0));
}

TEST(CoverageHomnetSir, DecreasingInT) {
  for (int th : {0, 8, 15}) {
    double prev = 1.0;
    for (double t = 0.05; t < 50.0; t *= 1.3) {
      const double v = coverage_homnet_sir(t, 10.0, th, 4.0);
      EXPECT_LT(v, prev);
      prev = v;
    }
  }
}

TEST(CoverageRandom, Examples) {
  EXPECT_NEAR(coverage_random(1.0, 10.0, 1.0, 4.0), coverage_homnet_sir(1.0, 10.0, 0, 4.0), 1e-15);
  EXPECT_NEAR(coverage_random(1.0, 10.0, 1e-6, 4.0), 1.0 / (1.0 + std::numbers::pi / 4.0), 1e-12);
  EXPECT_NEAR(coverage_random(1.0, 10.0, 0.5, 4.0), 0.560389751105404, 1e-12);
  EXPECT_THROW(coverage_random(1.0, 10.0, 0.0, 4.0), std::invalid_argument);
  EXPECT_THROW(coverage_random(1.0, 10.0, 1.5, 4.0), std::invalid_argument);
}

TEST(CoverageRandom, NearlyConstantInQ) {
  double lo = 1.0, hi = 0.0;
  for (double q = 0.3; q <= 1.0; q += 0.01) {
    const double v = coverage_random(1.0, 10.0, q, 4.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LT(hi - lo, 0.01);
}

TEST(CoverageHetnetSir, SingleTierIsBitIdentical) {
  for (int th : {0, 3, 10, 17}) {
    const NetworkSpec s = homnet(1e-4, 1e-3, th);
    EXPECT_EQ(coverage_hetnet_sir(s), coverage_homnet_sir(1.0, derive_ratios(s).gamma, th, 4.0));
    EXPECT_EQ(coverage_hetnet_sir(s, kPoisson), coverage_homnet_sir(1.0, derive_ratios(s).gamma, th, 4.0, kPoisson));
  }
}

TEST(CoverageHetnetSir, IdenticalTiersEqualDoubledDensity) {
  for (int th : {0, 2, 5, 9}) {
    NetworkSpec two;
    two.tiers = {{1e-4, 3.0, th}, {1e-4, 3.0, th}};
    two.user_density = 1e-3;
    const NetworkSpec one = homnet(2e-4, 1e-3, th);
    EXPECT_NEAR(coverage_hetnet_sir(two), coverage_hetnet_sir(one), 1e-14);
    EXPECT_NEAR(derive_ratios(two).weighted_ratio[0], 5.0, 1e-13);
  }
}

TEST(CoverageHetnetSir, ZeroThresholds) {
  const NetworkSpec s = hetnet_scenario(0, 0);
  const auto act = hetnet_activity(s, kExact);
  EXPECT_EQ(act.average.nearest, 1.0);
  EXPECT_NEAR(coverage_hetnet_sir(s), 1.0 / (1.0 + act.average.active * rho(1.0, 4.0)), 1e-15);
}

TEST(CoverageHetnetSir, ScenarioValue) {
  const NetworkSpec s = hetnet_scenario(10, 3);
  EXPECT_NEAR(derive_ratios(s).weighted_ratio[0], 10.0, 1e-12);
  EXPECT_NEAR(coverage_hetnet_sir(s), 0.656919809822878, 1e-12);
}

TEST(CoverageHetnetSir, AveragesInConvexHull) {
  for (int t1 = 0; t1 <= 14; t1 += 2)
    for (int t2 = 0; t2 <= 14; t2 += 2) {
      const auto act = hetnet_activity(hetnet_scenario(t1, t2), kExact);
      const auto [a0, a1] = std::minmax(act.per_tier[0].active, act.per_tier[1].active);
      const auto [c0, c1] = std::minmax(act.per_tier[0].not_nearest, act.per_tier[1].not_nearest);
      EXPECT_GE(act.average.active, a0 - 1e-15);
      EXPECT_LE(act.average.active, a1 + 1e-15);
      EXPECT_GE(act.average.not_nearest, c0 - 1e-15);
      EXPECT_LE(act.average.not_nearest, c1 + 1e-15);
    }
}

TEST(CoverageHetnetCondN, SingleTierMatchesHomnet) {
  const NetworkSpec s = homnet(1e-4, 1e-3, 6);
  const double pa = activity_probs(6, 10.0, kExact).active;
  for (int n = 1; n <= 4; ++n) {
    EXPECT_EQ(coverage_hetnet_cond_n(s, 1e8, n), coverage_cond_n_alpha4(1.0, 1e-4, pa, 1e8, n));
    EXPECT_EQ(coverage_hetnet_cond_n(s, kInf, n), coverage_cond_n(1.0, 4.0, 1e-4, pa, kInf, n));
  }
}

TEST(CoverageHetnetCondN, InterferenceLimitedIgnoresDensities) {
  const NetworkSpec s = hetnet_scenario(8, 2);
  const double pa = hetnet_activity(s, kExact).average.active;
  for (int n = 1; n <= 5; ++n)
    EXPECT_NEAR(coverage_hetnet_cond_n(s, kInf, n), std::pow(1.0 + pa * rho(1.0, 4.0), -n), 1e-9);
}

TEST(CoverageHetnetCondN, ConvexCombinationOfTiers) {
  const NetworkSpec s = hetnet_scenario(8, 2);
  const auto r = derive_ratios(s);
  const double pa = hetnet_activity(s, kExact).average.active;
  for (int n = 1; n <= 4; ++n) {
    const double v0 = coverage_cond_n_alpha4(1.0, r.weighted_density[0], pa, 1e8, n);
    const double v1 = coverage_cond_n_alpha4(1.0, r.weighted_density[1], pa, 1e8, n);
    const double v = coverage_hetnet_cond_n(s, 1e8, n);
    EXPECT_GE(v, std::min(v0, v1) - 1e-15);
    EXPECT_LE(v, std::max(v0, v1) + 1e-15);
  }
}

TEST(NthDistancePdf, Examples) {
  EXPECT_NEAR(nth_distance_pdf(50.0, 1, 1e-4), 0.014323718726811383, 1e-15);
  for (double r : {1.0, 30.0, 200.0}) {
    const double lam = 3e-4;
    EXPECT_NEAR(nth_distance_pdf(r, 1, lam),
                2.0 * std::numbers::pi * lam * r * std::exp(-lam * std::numbers::pi * r * r), 1e-15);
  }
  EXPECT_THROW(nth_distance_pdf(0.0, 1, 1e-4), std::invalid_argument);
}

TEST(NthDistancePdf, Normalized) {
  for (int n = 1; n <= 6; ++n)
    for (double lam : {1e-5, 1e-4, 1e-3}) {
      const double total = integrate([&](double r) { return nth_distance_pdf(r, n, lam); }, 1e-12, kInf,
                                     QuadratureSpec::precise());
      EXPECT_NEAR(total, 1.0, 1e-8) << n;
    }
}

TEST(NthDistanceCcdf, MatchesSumAndPdf) {
  const double lam = 1e-4;
  for (int n = 1; n <= 6; ++n)
    for (double r : {10.0, 60.0, 150.0}) {
      const double x = lam * std::numbers::pi * r * r;
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += std::exp(-x + k * std::log(x) - std::lgamma(k + 1.0));
      EXPECT_NEAR(nth_distance_ccdf(r, n, lam), sum, 1e-14);
      const double tail = integrate([&](double s) { return nth_distance_pdf(s, n, lam); }, r, kInf);
      EXPECT_NEAR(nth_distance_ccdf(r, n, lam), tail, 1e-8);
    }
}
