#pragma once

#include <chrono>
#include <optional>
#include <vector>

#include "tobit_iht/dataset.hpp"
#include "tobit_iht/sparsify.hpp"
#include "tobit_iht/types.hpp"

namespace tobit {

struct IhtConfig {
  Index s = 0;
  double c_star = 1e-3;
  /// Fixed step size; std::nullopt selects the restricted-Hessian step,
  /// re-evaluated at every iterate.
  std::optional<double> eta;
  int max_iters = 1000;
  /// Early stop on ||theta^{t+1} - theta^t||_2 < tol; 0 runs exactly max_iters.
  double tol = 1e-8;
  bool keep_intercept = false;
  bool backtracking = true;
  /// Warm start; cold start (0, c_star) when empty.
  std::optional<Theta> init;
  /// Keep every iterate in FitResult::thetas (needed for diagnostics).
  bool trace_thetas = false;

  ProjectionSpec projection() const { return {s, c_star, keep_intercept}; }
  void check(Index delta_len) const;
};

struct IterationRecord {
  int round = 0;  ///< outer round; always 0 for the local solver
  int iter = 0;
  double nll = 0.0;
  double step_norm = 0.0;
  std::vector<Index> support;
  double eta_used = 0.0;
};

struct FitResult {
  Theta theta;
  int iterations_run = 0;
  bool converged = false;
  /// Backtracking could not find a decreasing step; the last iterate was kept.
  bool stalled = false;
  std::vector<IterationRecord> trace;
  std::vector<Theta> thetas;  ///< empty unless IhtConfig::trace_thetas
  std::chrono::duration<double> wall_time{0.0};
};

Theta cold_start(Index d, double c_star);

/// project((delta - eta grad_delta, gamma - eta grad_gamma), spec).
Theta iht_step(const Theta& theta, const Vector& grad, double eta,
               const ProjectionSpec& spec);

/// 2 / (lambda_min + lambda_max) of the Hessian restricted to
/// supp(theta0), the top-2s gradient coordinates and gamma, with lambda_min
/// floored at 1e-6 lambda_max.
double auto_step_size(const CensoredDataset& data, const Theta& theta0, Index s);

/// Same, with the gradient at theta0 supplied (used by the surrogate solver,
/// whose gradient differs from the data gradient by a constant).
double auto_step_size(const CensoredDataset& data, const Theta& theta0,
                      const Vector& grad_at_theta0, Index s);

/// Centralized IHT: theta^{t+1} = P_{s,C*}(theta^t - eta grad nll(theta^t)).
FitResult fit(const CensoredDataset& data, const IhtConfig& config);

namespace detail {

/// Smooth objective the IHT loop descends.
class IhtObjective {
 public:
  virtual ~IhtObjective() = default;
  virtual double value(const Theta& theta) const = 0;
  virtual std::pair<double, Vector> value_and_gradient(const Theta& theta) const = 0;
  virtual double step_size(const Theta& theta, const Vector& grad, Index s) const = 0;
};

/// Runs the projected-gradient loop from `start`. `round` tags trace records
/// and divergence messages; pass -1 for the centralized solver. The initial record is emitted only when
/// `emit_initial` is set.
FitResult run_iht(const IhtObjective& objective, const IhtConfig& config,
                  const Theta& start, int round, bool emit_initial);

}  // namespace detail

}  // namespace tobit
