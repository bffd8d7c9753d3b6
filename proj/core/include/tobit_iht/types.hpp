#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace tobit {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Olsen working parameter: delta = beta / sigma, gamma = 1 / sigma.
struct Theta {
  Vector delta;
  double gamma = 1.0;

  Index dim() const { return delta.size() + 1; }

  /// (delta, gamma) stacked, gamma last.
  Vector stacked() const;
  static Theta from_stacked(const Vector& v);

  friend bool operator==(const Theta& a, const Theta& b) {
    return a.gamma == b.gamma && a.delta.size() == b.delta.size() &&
           a.delta == b.delta;
  }
};

/// Natural Tobit parameters.
struct ModelParams {
  Vector beta;
  double sigma = 1.0;
};

/// Sorted indices of the exactly-nonzero entries of v.
std::vector<Index> nonzero_support(const Vector& v);

}  // namespace tobit
