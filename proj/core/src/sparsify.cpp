#include "tobit_iht/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tobit_iht/error.hpp"

namespace tobit {

void ProjectionSpec::check(Index delta_len) const {
  require(s >= 0, "sparsity s must be nonnegative");
  require(s <= delta_len, "sparsity s = " + std::to_string(s) +
                              " exceeds the vector length " + std::to_string(delta_len));
  require(c_star > 0.0 && std::isfinite(c_star), "c_star must be positive and finite");
  require(!keep_intercept || s >= 1, "keep_intercept needs s >= 1");
}

Vector hard_threshold(const Vector& v, Index s, bool keep_intercept) {
  require(s >= 0 && s <= v.size(),
          "hard_threshold: s = " + std::to_string(s) + " outside [0, " +
              std::to_string(v.size()) + "]");
  require(!keep_intercept || s >= 1 || v.size() == 0,
          "hard_threshold: keep_intercept needs s >= 1");
  if (s == v.size()) return v;

  Vector out = Vector::Zero(v.size());
  const Index first = keep_intercept ? 1 : 0;
  const Index budget = keep_intercept ? s - 1 : s;
  if (keep_intercept) out[0] = v[0];
  if (budget == 0) return out;

  std::vector<Index> idx(static_cast<std::size_t>(v.size() - first));
  std::iota(idx.begin(), idx.end(), first);
  const auto before = [&](Index a, Index b) {
    const double ma = std::abs(v[a]);
    const double mb = std::abs(v[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  const auto cut = idx.begin() + budget;
  std::nth_element(idx.begin(), cut - 1, idx.end(), before);
  for (auto it = idx.begin(); it != cut; ++it) out[*it] = v[*it];
  return out;
}

Theta project(const Vector& delta_raw, double gamma_raw, const ProjectionSpec& spec) {
  spec.check(delta_raw.size());
  return Theta{hard_threshold(delta_raw, spec.s, spec.keep_intercept),
               truncate_gamma(gamma_raw, spec.c_star)};
}

}  // namespace tobit
