#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "tobit_iht/dataset.hpp"
#include "tobit_iht/solver_dist.hpp"
#include "tobit_iht/types.hpp"

namespace tobit {

inline constexpr std::string_view kRngAlgorithm = "splitmix64+box-muller/v1";

/// SplitMix64: state advances by a fixed odd constant and each output is a
/// bijective mix of the state, so stream k of a seed is mix(seed + k*gamma).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; the sine half of each pair is cached.
  double normal();

  /// Deterministic child seed for (parent, a, b); used for replications.
  static std::uint64_t derive(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0);

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class Design { iid_gaussian, ar1 };

struct GenSpec {
  Index n = 500;
  Index d = 100;
  Index s0 = 3;
  /// Explicit (feature index in 1..d, value) pairs; empty selects the
  /// default pattern +s, -s, +s, ... at features 1..s0.
  std::vector<std::pair<Index, double>> beta_nonzero;
  double beta0 = 0.5;
  double signal_strength = 1.0;
  double sigma_star = 1.0;
  Design design = Design::iid_gaussian;
  double rho = 0.3;
  double c0 = 0.0;
  std::uint64_t seed = 1;
  int shards = 1;
  /// Rows per shard; empty splits as evenly as possible (earlier shards
  /// take the remainder).
  std::vector<Index> shard_sizes;

  void check() const;
  /// beta* of length d+1 (intercept first).
  Vector true_beta() const;
};

struct GroundTruth {
  ModelParams params;  ///< natural-scale beta*, sigma*
  double c0 = 0.0;
  Index s0 = 0;

  /// theta* on the shifted scale the solvers work in.
  Theta theta() const;
};

struct GeneratedData {
  CensoredDataset pooled;
  std::vector<Shard> shards;  ///< contiguous partition of the input rows
  GroundTruth truth;
  Vector latent;  ///< y* in input order
};

/// Rows are drawn in order; for each row the d design entries come first,
/// then the noise draw.
GeneratedData generate(const GenSpec& spec);

double censoring_rate(const CensoredDataset& data);

}  // namespace tobit
