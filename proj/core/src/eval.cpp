#include "tobit_iht/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "tobit_iht/error.hpp"
#include "tobit_iht/model.hpp"

namespace tobit {

Metrics compute_metrics(const Theta& theta_hat, const GroundTruth& truth,
                        const CensoredDataset* holdout) {
  const Theta star = truth.theta();
  require(theta_hat.delta.size() == star.delta.size(),
          "compute_metrics: estimate has " + std::to_string(theta_hat.delta.size()) +
              " delta coordinates, truth has " + std::to_string(star.delta.size()));
  detail::require_positive_gamma(theta_hat.gamma, "compute_metrics");

  Metrics m;
  m.l2_theta = (theta_hat.stacked() - star.stacked()).norm();
  const ModelParams est = theta_to_params(theta_hat);
  const ModelParams ref = theta_to_params(star);
  m.l2_beta = (est.beta - ref.beta).norm();

  Index tp = 0, fp = 0, fn = 0, positives = 0;
  const Index p = star.delta.size();
  for (Index j = 1; j < p; ++j) {
    const bool actual = truth.params.beta[j] != 0.0;
    const bool picked = theta_hat.delta[j] != 0.0;
    positives += actual ? 1 : 0;
    if (actual && picked) ++tp;
    if (!actual && picked) ++fp;
    if (actual && !picked) ++fn;
  }
  const Index negatives = (p - 1) - positives;
  m.support_tpr = positives > 0 ? static_cast<double>(tp) / static_cast<double>(positives) : 1.0;
  m.support_fpr = negatives > 0 ? static_cast<double>(fp) / static_cast<double>(negatives) : 0.0;
  const Index denom = 2 * tp + fp + fn;
  m.support_f1 = denom > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 1.0;
  m.exact_support = fp == 0 && fn == 0;

  if (holdout != nullptr) {
    m.predictive_nll = nll(theta_hat, *holdout);
    m.censoring_rate = censoring_rate(*holdout);
  }
  return m;
}

std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
  require(folds >= 2, "fold_assignment: need at least 2 folds");
  require(n >= folds, "fold_assignment: fewer rows than folds");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  SplitMix64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.next() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] =
        static_cast<int>(k % folds);
  }
  return fold;
}

Index select_best_s(std::span<const CvRow> table) {
  require(!table.empty(), "select_best_s: empty table");
  const CvRow* best = &table.front();
  for (const auto& row : table) {
    if (row.mean_cv_nll < best->mean_cv_nll ||
        (row.mean_cv_nll == best->mean_cv_nll && row.s < best->s)) {
      best = &row;
    }
  }
  return best->s;
}

CvResult cross_validate_s(const CensoredDataset& data, std::span<const Index> s_grid,
                          int folds, const IhtConfig& base, std::uint64_t seed) {
  require(!s_grid.empty(), "cross_validate_s: empty s grid");
  require(folds >= 2, "cross_validate_s: need K >= 2");
  require(data.n() >= folds, "cross_validate_s: n < K");

  const auto fold = fold_assignment(data.n(), folds, seed);
  std::vector<CensoredDataset> train, test;
  for (int k = 0; k < folds; ++k) {
    std::vector<Index> in, out;
    for (Index r = 0; r < data.n(); ++r) {
      (fold[static_cast<std::size_t>(r)] == k ? out : in).push_back(r);
    }
    train.push_back(data.subset(in));
    test.push_back(data.subset(out));
    if (train.back().uncensored_count() == 0) {
      fail(ErrorKind::fold_degenerate,
           "fold " + std::to_string(k) + ": no uncensored rows in the training split");
    }
  }

  CvResult result;
  for (Index s : s_grid) {
    IhtConfig cfg = base;
    cfg.s = s;
    cfg.init.reset();
    cfg.trace_thetas = false;
    std::vector<double> scores;
    for (int k = 0; k < folds; ++k) {
      const FitResult f = fit(train[static_cast<std::size_t>(k)], cfg);
      scores.push_back(nll(f.theta, test[static_cast<std::size_t>(k)]));
    }
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / folds;
    double ss = 0.0;
    for (double v : scores) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (folds - 1));
    result.table.push_back({s, mean, sd / std::sqrt(static_cast<double>(folds))});
  }
  result.best_s = select_best_s(result.table);
  return result;
}

std::uint64_t replication_seed(std::uint64_t base_seed, Index n, int rep) {
  return SplitMix64::derive(base_seed, static_cast<std::uint64_t>(n),
                            static_cast<std::uint64_t>(rep));
}

double median(std::vector<double> values) {
  require(!values.empty(), "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

double iqr(std::vector<double> values) {
  require(!values.empty(), "iqr of an empty sample");
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

RateCurve rate_experiment(const GenSpec& base, std::span<const Index> n_grid, int reps,
                          const IhtConfig& config, int threads) {
  require(reps >= 1, "rate_experiment: reps must be at least 1");
  require(!n_grid.empty(), "rate_experiment: empty n grid");
  for (std::size_t k = 1; k < n_grid.size(); ++k) {
    require(n_grid[k] > n_grid[k - 1], "rate_experiment: n grid must be strictly increasing");
  }
  const int jobs = static_cast<int>(n_grid.size()) * reps;
  std::vector<double> errors(static_cast<std::size_t>(jobs));
  parallel_for(jobs, threads, [&](int job) {
    GenSpec spec = base;
    spec.n = n_grid[static_cast<std::size_t>(job / reps)];
    spec.seed = replication_seed(base.seed, spec.n, job % reps);
    spec.shards = 1;
    spec.shard_sizes.clear();
    const GeneratedData data = generate(spec);
    IhtConfig cfg = config;
    cfg.trace_thetas = false;
    const FitResult f = fit(data.pooled, cfg);
    errors[static_cast<std::size_t>(job)] = compute_metrics(f.theta, data.truth).l2_theta;
  });

  RateCurve curve;
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    std::vector<double> sample(errors.begin() + static_cast<std::ptrdiff_t>(k * reps),
                               errors.begin() + static_cast<std::ptrdiff_t>((k + 1) * reps));
    curve.points.push_back({n_grid[k], median(sample), iqr(sample), reps});
  }
  return curve;
}

std::vector<PairedRun> dist_vs_pooled(const GenSpec& base, int reps,
                                      const DistConfig& config, int threads) {
  require(reps >= 1, "dist_vs_pooled: reps must be at least 1");
  std::vector<PairedRun> rows(static_cast<std::size_t>(reps));
  parallel_for(reps, threads, [&](int rep) {
    GenSpec spec = base;
    spec.seed = replication_seed(base.seed, base.n, rep);
    const GeneratedData data = generate(spec);

    IhtConfig pooled_cfg = config.inner;
    pooled_cfg.init = config.init;
    pooled_cfg.trace_thetas = false;
    const FitResult pooled = fit(data.pooled, pooled_cfg);

    DistConfig dist_cfg = config;
    dist_cfg.inner.trace_thetas = false;
    const DistFitResult dist = fit_distributed(data.shards, dist_cfg);

    PairedRun& row = rows[static_cast<std::size_t>(rep)];
    row.rep = rep;
    row.seed = spec.seed;
    row.pooled_l2 = compute_metrics(pooled.theta, data.truth).l2_theta;
    row.dist_l2 = compute_metrics(dist.fit.theta, data.truth).l2_theta;
    row.ratio = row.dist_l2 / row.pooled_l2;
    row.comm = dist.comm;
  });
  return rows;
}

std::vector<ConvergencePoint> convergence_diagnostics(const FitResult& fit,
                                                      const Theta& reference, double tol) {
  if (fit.thetas.empty()) {
    fail(ErrorKind::diagnostics_unavailable,
         "convergence diagnostics need the iterates; rerun with trace_thetas");
  }
  const Vector ref = reference.stacked();
  std::vector<ConvergencePoint> out;
  out.reserve(fit.thetas.size());
  for (std::size_t t = 0; t < fit.thetas.size(); ++t) {
    out.push_back({static_cast<int>(t), (fit.thetas[t].stacked() - ref).norm(), std::nullopt});
  }
  const double floor = 10.0 * tol;
  for (std::size_t t = 0; t + 1 < out.size(); ++t) {
    if (out[t].error >= floor && out[t].error > 0.0) {
      out[t].ratio = out[t + 1].error / out[t].error;
    }
  }
  return out;
}

}  // namespace tobit
