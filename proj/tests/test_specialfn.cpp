#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "onoffcov/specialfn.hpp"

using namespace onoffcov;

namespace {

// Plain series sum_{k<n} e^{-x} x^k / k!, accumulated term by term.
double upper_gamma_series(int n, double x) {
  double term = std::exp(-x);
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    sum += term;
    term *= x / (k + 1);
  }
  return sum;
}

// D_{-n}(z) = e^{-z^2/4} / Gamma(n) * int_0^inf t^{n-1} e^{-t^2/2 - z t} dt, by midpoint rule.
double pcfd_midpoint(int n, double z) {
  const double upper = 40.0 + std::fabs(z);
  const int steps = 400000;
  const double h = upper / steps;
  double sum = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 0.5) * h;
    sum += std::pow(t, n - 1) * std::exp(-0.5 * t * t - z * t);
  }
  return std::exp(-0.25 * z * z) * sum * h / std::tgamma(n);
}

}  // namespace

TEST(RegularizedUpperGamma, Examples) {
  for (double x : {0.0, 0.3, 2.0, 11.0}) EXPECT_NEAR(regularized_upper_gamma(1, x), std::exp(-x), 1e-15);
  EXPECT_NEAR(regularized_upper_gamma(2, 1.0), 0.735758882342884643, 1e-15);
  EXPECT_EQ(regularized_upper_gamma(5, 0.0), 1.0);
}

TEST(RegularizedUpperGamma, MatchesSeriesAndIsMonotone) {
  for (int n = 1; n <= 30; ++n) {
    double prev = 1.0;
    for (double x = 0.0; x < 80.0; x += 0.37) {
      const double q = regularized_upper_gamma(n, x);
      EXPECT_NEAR(q, upper_gamma_series(n, x), 1e-13) << n << " " << x;
      EXPECT_LE(q, prev + 1e-15);
      prev = q;
    }
    EXPECT_LT(regularized_upper_gamma(n, 500.0), 1e-100);
  }
}

TEST(RegularizedUpperGamma, RejectsBadInput) {
  EXPECT_THROW(regularized_upper_gamma(0, 1.0), std::invalid_argument);
  EXPECT_THROW(regularized_upper_gamma(2, -1.0), std::invalid_argument);
}

TEST(NormalCdf, Examples) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(10.0), 1.0, 1e-12);
  EXPECT_NEAR(normal_cdf(1.0), 0.841344746068542949, 1e-15);
}

TEST(NormalCdf, Symmetry) {
  for (double x = -9.0; x <= 9.0; x += 0.05) EXPECT_NEAR(normal_cdf(x) + normal_cdf(-x), 1.0, 1e-12);
}

TEST(Erfcx, AgreesWithDefinitionWhereRepresentable) {
  for (double x = -3.0; x <= 25.0; x += 0.25)
    EXPECT_NEAR(erfcx(x), std::exp(x * x) * std::erfc(x), 1e-13 * std::exp(x * x) * std::erfc(x)) << x;
  EXPECT_NEAR(erfcx(1e4) * 1e4 * std::sqrt(std::numbers::pi), 1.0, 1e-8);
}

TEST(Integrate, Examples) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(integrate([](double x) { return std::exp(-x); }, 0.0, inf), 1.0, 1e-9);
  EXPECT_NEAR(integrate([](double x) { return x * std::exp(-x); }, 0.0, inf), 1.0, 1e-9);
  EXPECT_NEAR(integrate([](double x) { return x * x * std::exp(-2.0 * x); }, 0.0, inf), 0.25, 1e-9);
}

TEST(Integrate, GammaMomentsWithinRelativeTolerance) {
  const double inf = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= 10; ++n) {
    for (double a : {0.5, 1.0, 2.0}) {
      const double got = integrate([=](double x) { return std::exp(-a * x) * std::pow(x, n - 1); }, 0.0, inf);
      const double want = std::tgamma(n) / std::pow(a, n);
      EXPECT_NEAR(got / want, 1.0, 1e-8) << n << " " << a;
    }
  }
}

TEST(Integrate, FiniteIntervalAndEmptyInterval) {
  EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi), 2.0, 1e-12);
  EXPECT_EQ(integrate([](double x) { return x; }, 1.0, 1.0), 0.0);
}

TEST(Integrate, SignalsNonConvergence) {
  QuadratureSpec tight{1e-300, 1e-15, 3};
  EXPECT_THROW(integrate([](double x) { return std::sin(1.0 / x); }, 1e-6, 1.0, tight), NumericalError);
}

TEST(QuadratureSpec, Validation) {
  EXPECT_THROW((QuadratureSpec{0.0, 1e-8, 10}.validate()), std::invalid_argument);
  EXPECT_THROW((QuadratureSpec{1e-10, 1e-8, 0}.validate()), std::invalid_argument);
}

TEST(ParabolicCylinder, Anchors) {
  for (double z : {-3.0, -0.5, 0.0, 0.7, 4.0}) EXPECT_NEAR(parabolic_cylinder_d(0, z), std::exp(-0.25 * z * z), 1e-15);
  EXPECT_NEAR(parabolic_cylinder_d(-1, 0.0), 1.2533141373155003, 1e-14);
  for (double z : {-2.0, 0.0, 1.0, 3.0}) {
    const double q = 0.5 * std::erfc(z / std::numbers::sqrt2);
    EXPECT_NEAR(parabolic_cylinder_d(-1, z), std::exp(0.25 * z * z) * std::sqrt(2.0 * std::numbers::pi) * q, 1e-13);
  }
}

TEST(ParabolicCylinder, ReferenceValues) {
  EXPECT_NEAR(parabolic_cylinder_d(-3, 1.5) / 0.0502550799511571286, 1.0, 1e-12);
  EXPECT_NEAR(parabolic_cylinder_d(-5, 0.3) / 0.0826044692492746588, 1.0, 1e-12);
  EXPECT_NEAR(parabolic_cylinder_d(-7, -1.2) / 0.567144315084477673, 1.0, 1e-12);
  EXPECT_NEAR(parabolic_cylinder_d(-20, 4.0) / 1.72510555112754535e-17, 1.0, 1e-11);
  EXPECT_NEAR(parabolic_cylinder_d(-60, 2.5) / 1.31812031214119837e-49, 1.0, 1e-9);
}

TEST(ParabolicCylinder, MatchesIntegralRepresentation) {
  EXPECT_NEAR(parabolic_cylinder_d(-3, 1.5) / pcfd_midpoint(3, 1.5), 1.0, 1e-8);
  for (int n : {2, 4, 9})
    for (double z : {-1.0, 0.01, 0.6, 2.0, 6.0})
      EXPECT_NEAR(parabolic_cylinder_d(-n, z) / pcfd_midpoint(n, z), 1.0, 1e-7) << n << " " << z;
}

TEST(ParabolicCylinder, RecurrenceResidual) {
  for (double z : {-2.5, -0.3, 0.001, 0.49, 0.51, 1.0, 3.0, 12.0, 40.0}) {
    for (int m = 1; m < 40; ++m) {
      // D_{v+1} - z D_v + v D_{v-1} = 0 at v = -m, in scaled logs.
      const double lo = log_parabolic_cylinder_d_scaled(-(m + 1), z);
      const double mid = log_parabolic_cylinder_d_scaled(-m, z);
      const double hi = log_parabolic_cylinder_d_scaled(-(m - 1), z);
      const double residual = std::exp(hi - mid) - z - m * std::exp(lo - mid);
      EXPECT_LE(std::fabs(residual), 1e-8 * (std::exp(hi - mid) + std::fabs(z) + m * std::exp(lo - mid)))
          << z << " " << m;
    }
  }
}

TEST(ParabolicCylinder, LargeOrderCrossChecked) {
  EXPECT_TRUE(std::isfinite(log_parabolic_cylinder_d_scaled(-120, 3.0)));
  EXPECT_TRUE(std::isfinite(log_parabolic_cylinder_d_scaled(-200, 0.2)));
}

TEST(ParabolicCylinder, RejectsBadOrders) {
  EXPECT_THROW(parabolic_cylinder_d(1, 0.0), std::invalid_argument);
  EXPECT_THROW(parabolic_cylinder_d(-201, 0.0), std::invalid_argument);
}
