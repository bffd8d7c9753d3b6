#include "tobit_iht/datagen.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tobit_iht/error.hpp"
#include "tobit_iht/model.hpp"

namespace tobit {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t SplitMix64::next() {
  state_ += kGolden;
  return mix64(state_);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t SplitMix64::derive(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(parent ^ mix64(a + kGolden)) ^ mix64(b + 2 * kGolden));
}

void GenSpec::check() const {
  require(n >= 1, "GenSpec: n must be at least 1");
  require(d >= 0, "GenSpec: d must be nonnegative");
  require(s0 >= 0 && s0 <= d, "GenSpec: s0 must lie in [0, d]");
  require(sigma_star > 0.0 && std::isfinite(sigma_star), "GenSpec: sigma_star must be positive");
  require(std::isfinite(beta0) && std::isfinite(signal_strength) && std::isfinite(c0),
          "GenSpec: non-finite coefficient or threshold");
  if (design == Design::ar1) require(std::abs(rho) < 1.0, "GenSpec: ar1 needs |rho| < 1");
  require(shards >= 1, "GenSpec: shards must be at least 1");
  require(shards <= n, "GenSpec: more shards than rows");
  if (!shard_sizes.empty()) {
    require(static_cast<int>(shard_sizes.size()) == shards,
            "GenSpec: shard_sizes must list one size per shard");
    Index total = 0;
    for (Index sz : shard_sizes) {
      require(sz >= 1, "GenSpec: every shard needs at least one row");
      total += sz;
    }
    require(total == n, "GenSpec: shard sizes must sum to n");
  }
  for (const auto& [j, v] : beta_nonzero) {
    require(j >= 1 && j <= d, "GenSpec: beta_nonzero index " + std::to_string(j) +
                                  " outside 1..d");
    require(std::isfinite(v), "GenSpec: non-finite beta value");
  }
}

Vector GenSpec::true_beta() const {
  Vector beta = Vector::Zero(d + 1);
  beta[0] = beta0;
  if (beta_nonzero.empty()) {
    for (Index j = 1; j <= s0; ++j) {
      beta[j] = (j % 2 == 1) ? signal_strength : -signal_strength;
    }
  } else {
    for (const auto& [j, v] : beta_nonzero) beta[j] = v;
  }
  return beta;
}

Theta GroundTruth::theta() const {
  ModelParams shifted = params;
  shifted.beta[0] -= c0;
  return params_to_theta(shifted);
}

GeneratedData generate(const GenSpec& spec) {
  spec.check();
  const Index n = spec.n;
  const Index d = spec.d;
  const Vector beta = spec.true_beta();

  SplitMix64 rng(spec.seed);
  Matrix features(n, d);
  Vector latent(n);
  Vector y(n);
  const double innovation = std::sqrt(1.0 - spec.rho * spec.rho);
  for (Index i = 0; i < n; ++i) {
    double prev = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double z = rng.normal();
      double v = z;
      if (spec.design == Design::ar1 && j > 0) v = spec.rho * prev + innovation * z;
      features(i, j) = v;
      prev = v;
    }
    const double eps = spec.sigma_star * rng.normal();
    double mean = beta[0];
    for (Index j = 0; j < d; ++j) {
      if (beta[j + 1] != 0.0) mean += features(i, j) * beta[j + 1];
    }
    latent[i] = mean + eps;
    y[i] = latent[i] > spec.c0 ? latent[i] : spec.c0;
  }

  GeneratedData out;
  out.truth = GroundTruth{ModelParams{beta, spec.sigma_star}, spec.c0, spec.s0};
  out.latent = latent;

  std::vector<Index> sizes = spec.shard_sizes;
  if (sizes.empty()) {
    const Index base = n / spec.shards;
    const Index extra = n % spec.shards;
    for (int m = 0; m < spec.shards; ++m) sizes.push_back(base + (m < extra ? 1 : 0));
  }
  Index start = 0;
  for (int m = 0; m < spec.shards; ++m) {
    const Index len = sizes[static_cast<std::size_t>(m)];
    out.shards.push_back(Shard{m, CensoredDataset::from_features(
                                      features.middleRows(start, len),
                                      y.segment(start, len), spec.c0)});
    start += len;
  }
  out.pooled = CensoredDataset::from_features(features, y, spec.c0);
  return out;
}

double censoring_rate(const CensoredDataset& data) {
  if (data.n() == 0) return 0.0;
  return static_cast<double>(data.n() - data.uncensored_count()) /
         static_cast<double>(data.n());
}

}  // namespace tobit
