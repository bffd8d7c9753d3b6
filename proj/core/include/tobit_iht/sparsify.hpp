#pragma once

#include "tobit_iht/types.hpp"

namespace tobit {

/// Joint projection P_{s,C*}: keep the s largest-magnitude entries of delta,
/// clamp gamma from below at c_star. Gamma is never thresholded.
struct ProjectionSpec {
  Index s = 0;
  double c_star = 1e-3;
  /// Always retain delta[0]; it still counts against s.
  bool keep_intercept = false;

  /// Throws Error(invalid_argument) unless s <= delta_len and c_star > 0.
  void check(Index delta_len) const;
};

/// Best s-sparse approximation of v. Ties at the cut are broken by
/// (|value| descending, index ascending), so the result is deterministic.
Vector hard_threshold(const Vector& v, Index s, bool keep_intercept = false);

inline double truncate_gamma(double gamma, double c_star) {
  return gamma >= c_star ? gamma : c_star;
}

Theta project(const Vector& delta_raw, double gamma_raw, const ProjectionSpec& spec);

}  // namespace tobit
