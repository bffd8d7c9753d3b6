#pragma once

// Gaussian tail kernels for the censored likelihood.
//
//   g(a) = phi(a) / Phi(a)          (inverse Mills ratio)
//   h(a) = g(a) * (a + g(a)) = -g'(a),  0 < h < 1
//
// All functions are pure and reentrant. Non-finite input throws
// Error(invalid_argument).

namespace tobit::special {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;

/// Scaled complementary error function exp(x^2) erfc(x). Finite for
/// x > -26.6; overflows to +inf below.
double erfcx(double x);

double normal_pdf(double a);
double normal_cdf(double a);

/// log Phi(a). Strictly negative; saturates at -DBL_TRUE_MIN once
/// Phi(a) rounds to 1.
double log_phi_cdf(double a);

/// g(a) = phi(a)/Phi(a). Strictly positive; saturates at DBL_TRUE_MIN when
/// the true value underflows (a > ~38.5).
double mills_g(double a);

/// h(a) = g(a)(a + g(a)), kept inside the open interval (0, 1).
double mills_h(double a);

}  // namespace tobit::special
