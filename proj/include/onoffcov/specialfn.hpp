#pragma once

// Numerical kernels used by the coverage formulas: Poisson-sum form of the
// regularized upper incomplete gamma function, parabolic cylinder functions of
// negative integer order, the standard normal CDF and adaptive Gauss-Kronrod
// quadrature on finite and semi-infinite intervals.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace onoffcov {

/// Raised when a numerical routine cannot deliver the requested accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureSpec {
  double absolute_tolerance = 1e-10;
  double relative_tolerance = 1e-8;
  int max_subdivisions = 200;

  /// Tight preset used where results are compared against closed forms.
  static constexpr QuadratureSpec precise() { return {1e-14, 1e-12, 400}; }

  void validate() const {
    if (!(absolute_tolerance > 0.0) || !(relative_tolerance > 0.0))
      throw std::invalid_argument("QuadratureSpec: tolerances must be positive");
    if (max_subdivisions < 1)
      throw std::invalid_argument("QuadratureSpec: max_subdivisions must be >= 1");
  }
};

/// Q(n, x) = Gamma(n, x) / Gamma(n) = sum_{k<n} e^{-x} x^k / k! for integer n >= 1.
inline double regularized_upper_gamma(int n, double x) {
  if (n < 1) throw std::invalid_argument("regularized_upper_gamma: n must be >= 1");
  if (!(x >= 0.0)) throw std::invalid_argument("regularized_upper_gamma: x must be >= 0");
  if (x == 0.0) return 1.0;
  const double log_x = std::log(x);
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    sum += std::exp(k * log_x - x - std::lgamma(k + 1.0));
  }
  return std::min(sum, 1.0);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Scaled complementary error function exp(x^2) erfc(x).
inline double erfcx(double x) {
  if (x < 5.0) return std::exp(x * x) * std::erfc(x);
  // Continued fraction x + (1/2)/(x + 1/(x + (3/2)/(x + ...))), modified Lentz.
  constexpr double tiny = 1e-300;
  double f = x;
  double c = f;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / (std::sqrt(std::numbers::pi) * f);
}

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod_15(F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double f_center = f(center);
  double kronrod = f_center * kKronrodWeights[7];
  double gauss = f_center * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * pair;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  if (!std::isfinite(kronrod))
    throw NumericalError("integrate: integrand is not finite on [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
  return {lo, hi, kronrod, std::abs(kronrod - gauss)};
}

template <class F>
double adaptive_gauss_kronrod(F& f, double lo, double hi, const QuadratureSpec& spec) {
  std::priority_queue<Segment> segments;
  Segment first = gauss_kronrod_15(f, lo, hi);
  double total = first.value;
  double total_error = first.error;
  segments.push(first);
  int subdivisions = 1;
  while (total_error > std::max(spec.absolute_tolerance, spec.relative_tolerance * std::abs(total))) {
    if (subdivisions >= spec.max_subdivisions)
      throw NumericalError("integrate: no convergence after " + std::to_string(subdivisions) +
                           " subdivisions (error estimate " + std::to_string(total_error) + ")");
    Segment worst = segments.top();
    segments.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    Segment left = gauss_kronrod_15(f, worst.lo, mid);
    Segment right = gauss_kronrod_15(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    segments.push(left);
    segments.push(right);
    ++subdivisions;
  }
  // Re-sum from the segments to shed the drift of the running updates.
  double sum = 0.0;
  std::vector<double> parts;
  parts.reserve(segments.size());
  while (!segments.empty()) {
    parts.push_back(segments.top().value);
    segments.pop();
  }
  std::sort(parts.begin(), parts.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  for (double p : parts) sum += p;
  return sum;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod quadrature of f over [a, b]. An infinite upper limit
/// is mapped onto [0, 1) through x = a + t / (1 - t), i.e. t = (x - a) / (1 + x - a).
template <class F>
double integrate(F&& f, double a, double b, const QuadratureSpec& spec = {}) {
  spec.validate();
  if (std::isnan(a) || std::isnan(b) || std::isinf(a))
    throw std::invalid_argument("integrate: lower limit must be finite");
  if (b < a) throw std::invalid_argument("integrate: requires a <= b");
  if (b == a) return 0.0;
  if (std::isinf(b)) {
    auto mapped = [&f, a](double t) {
      const double one_minus = 1.0 - t;
      return f(a + t / one_minus) / (one_minus * one_minus);
    };
    return detail::adaptive_gauss_kronrod(mapped, 0.0, 1.0, spec);
  }
  return detail::adaptive_gauss_kronrod(f, a, b, spec);
}

namespace detail {

inline void check_recurrence_triple(double up_over_mid, double z, double v, double down_over_mid) {
  // D_{v+1} - z D_v + v D_{v-1} = 0, all divided by D_v.
  const double residual = up_over_mid - z + v * down_over_mid;
  const double scale = std::abs(up_over_mid) + std::abs(z) + std::abs(v * down_over_mid);
  if (!(std::abs(residual) <= 1e-8 * scale))
    throw NumericalError("parabolic_cylinder_d: recurrence residual check failed");
}

// log(e^{z^2/4} D_{-n}(z)) from the integral representation
// e^{z^2/4} D_{-n}(z) = 1/Gamma(n) * int_0^inf t^{n-1} exp(-t^2/2 - z t) dt, n >= 1.
inline double log_parabolic_cylinder_d_scaled_integral(int n, double z) {
  const double peak = n == 1 ? std::max(0.0, -z) : 0.5 * (-z + std::sqrt(z * z + 4.0 * (n - 1)));
  auto log_integrand = [n, z](double t) {
    if (t <= 0.0) return n == 1 ? 0.0 : -std::numeric_limits<double>::infinity();
    return (n - 1) * std::log(t) - 0.5 * t * t - z * t;
  };
  const double log_peak = n == 1 && peak == 0.0 ? 0.0 : log_integrand(peak);
  const double value = integrate(
      [&](double t) { return std::exp(log_integrand(t) - log_peak); }, 0.0,
      std::numeric_limits<double>::infinity(), QuadratureSpec{1e-300, 1e-11, 2000});
  return log_peak + std::log(value) - std::lgamma(static_cast<double>(n));
}

}  // namespace detail

/// log(e^{z^2/4} D_order(z)) for order in {0, -1, ..., -200}. Scaling by
/// e^{z^2/4} keeps the value representable for the large arguments that appear
/// in the alpha = 4 coverage formula.
inline double log_parabolic_cylinder_d_scaled(int order, double z) {
  if (order > 0) throw std::invalid_argument("parabolic_cylinder_d: order must be <= 0");
  if (order < -200) throw std::invalid_argument("parabolic_cylinder_d: |order| must be <= 200");
  if (!std::isfinite(z)) throw std::invalid_argument("parabolic_cylinder_d: z must be finite");
  const int n = -order;
  if (n == 0) return 0.0;

  // Closed-form anchors: e^{z^2/4} D_0 = 1 and e^{z^2/4} D_{-1} = sqrt(2 pi) e^{z^2/2} Q(z).
  const double scaled_d1 = std::sqrt(std::numbers::pi / 2.0) * erfcx(z / std::numbers::sqrt2);
  if (!(scaled_d1 > 0.0) || !std::isfinite(scaled_d1))
    throw NumericalError("parabolic_cylinder_d: D_{-1} anchor out of range");

  // ratio[m] = D_{-m} / D_{-m+1}, m = 1..n+1.
  std::vector<double> ratio(n + 2, 0.0);
  ratio[1] = scaled_d1;
  if (z > 0.5) {
    // D_{-m} is the minimal solution: run the ratio recurrence downward from a
    // deep start and repeat with a deeper start until the ratios settle.
    int depth = n + 60;
    std::vector<double> previous;
    bool converged = false;
    for (int attempt = 0; attempt < 12; ++attempt, depth *= 2) {
      std::vector<double> current(n + 2, 0.0);
      double r = 0.0;
      for (int m = depth; m >= 1; --m) {
        r = 1.0 / (z + m * r);
        if (m <= n + 1) current[m] = r;
      }
      bool settled = !previous.empty();
      for (int m = 1; settled && m <= n + 1; ++m)
        settled = std::abs(current[m] - previous[m]) <= 1e-15 * current[m];
      previous = std::move(current);
      if (settled) {
        converged = true;
        break;
      }
    }
    if (!converged || std::abs(previous[1] - scaled_d1) > 1e-10 * scaled_d1)
      throw NumericalError("parabolic_cylinder_d: backward recurrence disagrees with D_{-1}");
    for (int m = 2; m <= n + 1; ++m) ratio[m] = previous[m];
  } else {
    // Forward: D_{-m-1} = (D_{-m+1} - z D_{-m}) / m. Near z = 0 the two
    // solutions grow alike, so the upward direction loses nothing.
    for (int m = 1; m <= n; ++m) ratio[m + 1] = (1.0 / ratio[m] - z) / m;
  }

  double log_value = 0.0;
  for (int m = 1; m <= n; ++m) {
    if (!(ratio[m] > 0.0) || !std::isfinite(ratio[m]))
      throw NumericalError("parabolic_cylinder_d: loss of precision in recurrence");
    log_value += std::log(ratio[m]);
    // Triple (D_{-m+1}, D_{-m}, D_{-m-1}) at v = -m.
    detail::check_recurrence_triple(1.0 / ratio[m], z, -static_cast<double>(m), ratio[m + 1]);
  }

  if (n > 50) {
    const double check = detail::log_parabolic_cylinder_d_scaled_integral(n, z);
    if (std::abs(std::expm1(log_value - check)) > 1e-6)
      throw NumericalError("parabolic_cylinder_d: recurrence disagrees with integral representation");
  }
  return log_value;
}

/// D_order(z) for nonpositive integer order.
inline double parabolic_cylinder_d(int order, double z) {
  return std::exp(log_parabolic_cylinder_d_scaled(order, z) - 0.25 * z * z);
}

}  // namespace onoffcov
