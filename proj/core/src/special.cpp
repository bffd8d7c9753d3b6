#include "tobit_iht/special.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tobit_iht/error.hpp"

namespace tobit::special {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrtPi = 0.56418958354775628695;
constexpr double kLn2 = 0.69314718055994530942;
constexpr double kTiny = std::numeric_limits<double>::denorm_min();

// Below this point the closed forms lose too much to cancellation and the
// Mills-ratio expansion is accurate to a few ulp.
constexpr double kAsymptoticEdge = -40.0;
constexpr double kUpperEdge = 40.0;

void check_finite(double a, const char* fn) {
  if (!std::isfinite(a)) {
    fail(ErrorKind::invalid_argument,
         std::string(fn) + ": non-finite argument " + std::to_string(a));
  }
}

// exp(-a^2/2) with a^2 split into hi + lo so the exponent is exact to
// working precision even for |a| ~ 40.
double exp_neg_half_square(double a) {
  const double hi = a * a;
  if (!std::isfinite(hi)) return 0.0;
  const double lo = std::fma(a, a, -hi);
  return std::exp(-0.5 * hi) * (1.0 - 0.5 * lo);
}

// g(-x) - x for large x, from the reciprocal of the Mills-ratio series.
double mills_remainder(double x) {
  const double u = 1.0 / (x * x);
  return (1.0 + u * (-2.0 + u * (10.0 + u * (-74.0 + u * 706.0)))) / x;
}

}  // namespace

double erfcx(double x) {
  if (std::isnan(x)) return x;
  // 2 exp(x^2) overflows below here
  if (x < -26.7) return HUGE_VAL;
  if (x < 26.0) {
    const double hi = x * x;
    const double lo = std::fma(x, x, -hi);
    return std::exp(hi) * (1.0 + lo) * std::erfc(x);
  }
  // Asymptotic series 1/(x sqrt(pi)) * sum (-1)^k (2k-1)!! / (2x^2)^k;
  // at x >= 26 eight terms are past double precision.
  const double v = 1.0 / (2.0 * x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2.0 * k - 1.0) * v;
    sum += term;
  }
  return kInvSqrtPi * sum / x;
}

double normal_pdf(double a) {
  check_finite(a, "normal_pdf");
  return kInvSqrt2Pi * exp_neg_half_square(a);
}

double normal_cdf(double a) {
  check_finite(a, "normal_cdf");
  return 0.5 * std::erfc(-a * kInvSqrt2);
}

double log_phi_cdf(double a) {
  check_finite(a, "log_phi_cdf");
  if (a > kUpperEdge) return -kTiny;
  if (a >= -1.0) {
    const double v = std::log1p(-0.5 * std::erfc(a * kInvSqrt2));
    return v < 0.0 ? v : -kTiny;
  }
  // log erfc(x) = log erfcx(x) - x^2 with x = -a/sqrt(2).
  const double hi = a * a;
  const double lo = std::fma(a, a, -hi);
  return (std::log(erfcx(-a * kInvSqrt2)) - kLn2) - 0.5 * lo - 0.5 * hi;
}

double mills_g(double a) {
  check_finite(a, "mills_g");
  if (a < kAsymptoticEdge) {
    const double x = -a;
    return x + mills_remainder(x);
  }
  if (a < 0.0) return kSqrt2OverPi / erfcx(-a * kInvSqrt2);
  if (a > kUpperEdge) return kTiny;
  const double g = normal_pdf(a) / normal_cdf(a);
  return g > 0.0 ? g : kTiny;
}

double mills_h(double a) {
  check_finite(a, "mills_h");
  double h;
  if (a < kAsymptoticEdge) {
    const double r = mills_remainder(-a);
    h = (-a + r) * r;
  } else {
    const double g = mills_g(a);
    h = g * (a + g);
  }
  constexpr double kFloor = 1e-300;
  if (!(h > 0.0)) return kFloor;
  if (!(h < 1.0)) return std::nextafter(1.0, 0.0);
  return h;
}

}  // namespace tobit::special
