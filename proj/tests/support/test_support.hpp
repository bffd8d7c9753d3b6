#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tobit_iht/tobit_iht.hpp"

namespace tobit::testing {

// High-precision reference values from tests/oracles/special_values.py
// (mpmath quadrature at 50 digits, no erfc in the code path).
struct SpecialPoint {
  double a;
  double log_cdf;
  double g;
  double h;
};

inline constexpr SpecialPoint kSpecialTable[] = {
    {-40, -804.60844201375378817, 40.024968847207263723, 0.99937733162140861123},
    {-38, -726.5572160188201301, 38.026279466575868988, 0.99931034024653374113},
    {-30, -454.32124395634319711, 30.033259667433677037, 0.998896228488109909},
    {-20, -203.91715537109726394, 20.049753068527850542, 0.9975367383849478364},
    {-10, -53.231285150512470578, 10.098093233962511963, 0.99055462217434373884},
    {-5, -15.064998393988725736, 5.1865039671258421156, 0.96730356538288777465},
    {-2.5, -5.0816482772786904984, 2.8227447976639072505, 0.91102619857888455719},
    {-1, -1.8410216450092635058, 1.5251352761609812091, 0.80090233442965120845},
    {-0.5, -1.1759117615936186089, 1.1410777703680644809, 0.73151959284412105382},
    {0, -0.69314718055994530942, 0.79788456080286535588, 0.63661977236758134308},
    {0.5, -0.36894641528865639307, 0.50916043383703348583, 0.51382456430363289677},
    {1, -0.17275377902344988953, 0.28759997093917836123, 0.37031371422339459914},
    {1.3, -0.10181180266765503052, 0.18973503541925961675, 0.2826549297105852115},
    {2, -0.023012909328963488465, 0.055247862678989959102, 0.11354805168857644979},
    {5, -2.8665161296376359338e-7, 1.4867199409049057124e-6, 7.4336019148607112465e-6},
    {8, -6.2209605742717860585e-16, 5.0522710835368954309e-15, 4.0418168668295188973e-14},
    {12, -1.7764821120776789977e-33, 2.146383735663060345e-32, 2.575660482795672414e-31},
    {20, -2.7536241186062336951e-89, 5.5209483621597631896e-88, 1.1041896724319526379e-86},
    {30, -4.9067139271481870595e-198, 1.473646134878547519e-196, 4.4209384046356425571e-195},
};

inline constexpr double kCensoredMeanMinusOne = 0.083315470587686298383;

// Extended-precision oracles built on erfcl; independent of special.cpp.
inline long double oracle_cdf(long double a) {
  return 0.5L * std::erfc(-a / std::sqrt(2.0L));
}
inline long double oracle_log_cdf(long double a) { return std::log(oracle_cdf(a)); }
inline long double oracle_g(long double a) {
  const long double pdf = std::exp(-a * a / 2.0L) / std::sqrt(2.0L * 3.141592653589793238462643L);
  return pdf / oracle_cdf(a);
}

// Straight transcription of the average negative log-likelihood, in long
// double, one row at a time.
inline double oracle_nll(const Theta& theta, const CensoredDataset& data) {
  long double total = 0.0L;
  for (Index i = 0; i < data.n(); ++i) {
    long double r = 0.0L;
    for (Index j = 0; j < data.x().cols(); ++j) {
      r += static_cast<long double>(data.x()(i, j)) * theta.delta[j];
    }
    if (data.censored(i)) {
      total -= oracle_log_cdf(-r);
    } else {
      const long double z = theta.gamma * static_cast<long double>(data.y()[i]) - r;
      total += -std::log(static_cast<long double>(theta.gamma)) + 0.5L * z * z;
    }
  }
  return static_cast<double>(total / static_cast<long double>(data.n()));
}

/// Gaussian design with a latent Tobit response, roughly 40% censored.
/// Row 0 is always censored and row 1 uncensored.
inline CensoredDataset random_dataset(std::uint64_t seed, Index n, Index d, double c0 = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix features(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    double latent = 0.3 * normal(rng);
    for (Index j = 0; j < d; ++j) {
      features(i, j) = normal(rng);
      latent += features(i, j) * (j % 3 == 0 ? 0.8 : 0.0);
    }
    latent += normal(rng);
    y[i] = std::max(latent, 0.0) + c0;
  }
  if (n >= 2) {
    y[0] = c0;
    y[1] = c0 + 1.0 + std::abs(y[1] - c0);
  }
  return CensoredDataset::from_features(features, y, c0);
}

inline Theta random_theta(std::mt19937_64& rng, Index p, double gamma_lo = 0.2,
                          double gamma_hi = 5.0) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(gamma_lo, gamma_hi);
  Theta t;
  t.delta = Vector(p);
  for (Index j = 0; j < p; ++j) t.delta[j] = 0.5 * normal(rng);
  t.gamma = unif(rng);
  return t;
}

inline CensoredDataset single_row(double x, double y, double c0 = 0.0) {
  Matrix m(1, 1);
  m(0, 0) = x;
  Vector v(1);
  v[0] = y;
  return CensoredDataset(m, v, c0);
}

/// 200 vectors of length 1..8. A third use small integers so magnitude
/// ties and zeros are common.
inline std::vector<Vector> projection_fixture() {
  std::mt19937_64 rng(8675309);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> small(-3, 3);
  std::vector<Vector> out;
  for (int k = 0; k < 200; ++k) {
    const Index len = 1 + k % 8;
    Vector v(len);
    for (Index j = 0; j < len; ++j) {
      v[j] = k % 3 == 0 ? static_cast<double>(small(rng)) : normal(rng);
    }
    out.push_back(v);
  }
  return out;
}

/// Exhaustive best s-sparse approximation: among supports of size
/// min(s, len) with minimal residual, the one that is lexicographically
/// first under (|value| descending, index ascending).
inline Vector brute_force_threshold(const Vector& v, Index s) {
  const Index len = v.size();
  const Index k = std::min(s, len);
  std::vector<int> mask(static_cast<std::size_t>(len), 0);
  std::fill(mask.begin(), mask.begin() + k, 1);
  double best_kept = -1.0;
  std::vector<Index> best;
  auto rank_key = [&](const std::vector<Index>& idx) {
    std::vector<std::pair<double, Index>> key;
    for (Index j : idx) key.push_back({-std::abs(v[j]), j});
    std::sort(key.begin(), key.end());
    return key;
  };
  do {
    std::vector<Index> idx;
    double kept = 0.0;
    for (Index j = 0; j < len; ++j) {
      if (mask[static_cast<std::size_t>(j)]) {
        idx.push_back(j);
        kept += v[j] * v[j];
      }
    }
    if (kept > best_kept || (kept == best_kept && rank_key(idx) < rank_key(best))) {
      best_kept = kept;
      best = idx;
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  Vector out = Vector::Zero(len);
  for (Index j : best) out[j] = v[j];
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tobit_iht_tests_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tobit::testing
