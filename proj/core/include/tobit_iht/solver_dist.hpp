#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tobit_iht/dataset.hpp"
#include "tobit_iht/solver_local.hpp"

namespace tobit {

/// Local sample held by one simulated machine. machine_id 0 is the central
/// machine that runs the inner loop.
struct Shard {
  int machine_id = 0;
  CensoredDataset data;
};

struct DistConfig {
  IhtConfig inner;  ///< s, eta, T, C*, tol, keep_intercept for each inner loop
  int outer_rounds = 1;  ///< Q
  std::optional<Theta> init;
  /// Start from a local IHT fit on the central shard alone (no
  /// communication) instead of `init` / cold start. The outer-loop error
  /// bound only contracts from an anchor already close to the target.
  bool central_warm_start = false;

  void check(Index delta_len) const;
};

/// Communication accounting: one (d+2)-vector per message.
struct CommLog {
  int rounds = 0;
  std::int64_t vectors_sent = 0;
  std::int64_t bytes_estimate = 0;
};

/// Per-round check that the surrogate gradient reproduces the aggregated
/// global gradient at the anchor.
struct AnchorRecord {
  int round = 0;
  double residual_inf = 0.0;  ///< || grad L~(theta_bar) - grad L_N(theta_bar) ||_inf
};

struct DistFitResult {
  FitResult fit;
  int warm_start_iterations = 0;
  CommLog comm;
  std::vector<AnchorRecord> anchors;
};

// Message-passing surface between the central machine and the workers.

struct GradientRequest {
  int round = 0;
  Theta theta_bar;
};

struct GradientResponse {
  int machine_id = 0;
  Vector gradient;
  Index n_rows = 0;
};

/// Evaluates local gradients for one shard. Raw rows never leave the worker.
class Worker {
 public:
  explicit Worker(Shard shard);
  GradientResponse handle(const GradientRequest& request) const;
  int machine_id() const { return shard_.machine_id; }

 private:
  Shard shard_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Machine ids reachable through this transport (the central machine is
  /// not one of them).
  virtual std::vector<int> machine_ids() const = 0;
  /// Synchronous round: sends the request to every machine and blocks
  /// until all have answered. Response order is unspecified.
  virtual std::vector<GradientResponse> broadcast(const GradientRequest& request) = 0;
};

/// Workers in the same process, each round evaluated on its own thread.
class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(std::vector<Worker> workers);
  std::vector<int> machine_ids() const override;
  std::vector<GradientResponse> broadcast(const GradientRequest& request) override;

 private:
  std::vector<Worker> workers_;
};

/// Equals gradient(theta_bar, shard.data).
Vector local_gradient(const Shard& shard, const Theta& theta_bar);

/// sum_m (n_m / N) grad_m in ascending machine_id order, reduced pairwise.
/// Throws Error(incomplete_round) if the ids are not exactly
/// {0, ..., expected_machines - 1}, Error(protocol) on a length mismatch.
Vector aggregate_gradients(std::span<const GradientResponse> responses,
                           int expected_machines);

/// grad L1(theta) - (grad L1(theta_bar) - global_grad_at_bar).
Vector surrogate_gradient(const Theta& theta, const Theta& theta_bar,
                          const Shard& central, const Vector& global_grad_at_bar);

/// L~(theta) = L1(theta) - <theta, grad L1(theta_bar) - grad L_N(theta_bar)>,
/// with the correction computed once at construction.
class SurrogateLoss final : public detail::IhtObjective {
 public:
  SurrogateLoss(const CensoredDataset& central, const Theta& theta_bar,
                const Vector& global_grad_at_bar);

  double value(const Theta& theta) const override;
  std::pair<double, Vector> value_and_gradient(const Theta& theta) const override;
  double step_size(const Theta& theta, const Vector& grad, Index s) const override;

  const Vector& correction() const { return correction_; }

 private:
  const CensoredDataset& central_;
  Vector correction_;
};

/// Communication-efficient distributed IHT with shards[0] as the central
/// machine. Every shard is validated before round 0.
DistFitResult fit_distributed(std::span<const Shard> shards, const DistConfig& config);

/// Same algorithm over an arbitrary transport to machines 1..M-1.
DistFitResult fit_distributed(const Shard& central, Transport& transport,
                              const DistConfig& config);

/// Smallest Q with n^Q >= N, i.e. ceil(log N / log n); 1 when n == N.
int recommended_rounds(Index n, Index big_n);

}  // namespace tobit
