#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tobit_iht/datagen.hpp"
#include "tobit_iht/solver_dist.hpp"
#include "tobit_iht/solver_local.hpp"

namespace tobit {

struct Metrics {
  double l2_theta = 0.0;
  double l2_beta = 0.0;
  /// Support scores on delta's nonzeros vs beta*'s, intercept excluded.
  double support_tpr = 0.0;
  double support_fpr = 0.0;
  double support_f1 = 0.0;
  bool exact_support = false;
  std::optional<double> predictive_nll;  ///< only with a holdout
  std::optional<double> censoring_rate;  ///< of the holdout
};

Metrics compute_metrics(const Theta& theta_hat, const GroundTruth& truth,
                        const CensoredDataset* holdout = nullptr);

struct CvRow {
  Index s = 0;
  double mean_cv_nll = 0.0;
  double se = 0.0;
};

struct CvResult {
  Index best_s = 0;
  std::vector<CvRow> table;
};

/// Fold id per input row from a seeded permutation; fold sizes differ by at
/// most one.
std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed);

/// argmin of mean_cv_nll; equal means resolve to the smaller s.
Index select_best_s(std::span<const CvRow> table);

/// K-fold CV of the held-out Tobit nll over `s_grid`. best_s is the argmin
/// of the mean, ties going to the smaller s.
CvResult cross_validate_s(const CensoredDataset& data, std::span<const Index> s_grid,
                          int folds, const IhtConfig& base, std::uint64_t seed);

struct RatePoint {
  Index n = 0;
  double median_l2 = 0.0;
  double iqr_l2 = 0.0;
  int replications = 0;
};

struct RateCurve {
  std::vector<RatePoint> points;
};

/// Replication r at sample size n uses seed SplitMix64::derive(base.seed, n, r).
std::uint64_t replication_seed(std::uint64_t base_seed, Index n, int rep);

/// Median and IQR of l2_theta for each n. Replications run on up to
/// `threads` workers and are reduced in (n, rep) order.
RateCurve rate_experiment(const GenSpec& base, std::span<const Index> n_grid, int reps,
                          const IhtConfig& config, int threads = 1);

struct PairedRun {
  int rep = 0;
  std::uint64_t seed = 0;
  double pooled_l2 = 0.0;
  double dist_l2 = 0.0;
  double ratio = 0.0;
  CommLog comm;
};

/// Same data fitted pooled (solver_local on all N rows) and distributed
/// over base.shards machines.
std::vector<PairedRun> dist_vs_pooled(const GenSpec& base, int reps,
                                      const DistConfig& config, int threads = 1);

struct ConvergencePoint {
  int t = 0;
  double error = 0.0;
  std::optional<double> ratio;  ///< e_{t+1}/e_t, absent once e_t < 10 tol
};

/// e_t = ||theta^t - reference||_2 over the retained iterates. Throws
/// Error(diagnostics_unavailable) when the fit did not keep its iterates.
std::vector<ConvergencePoint> convergence_diagnostics(const FitResult& fit,
                                                      const Theta& reference, double tol);

double median(std::vector<double> values);
/// Interquartile range with linear interpolation between order statistics.
double iqr(std::vector<double> values);

/// Applies fn(i) for i in [0, count) on up to `threads` threads. Results
/// must be written to per-index slots by the caller.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace tobit
