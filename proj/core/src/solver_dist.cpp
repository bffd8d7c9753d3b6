#include "tobit_iht/solver_dist.hpp"

#include <algorithm>
#include <future>
#include <string>

#include "tobit_iht/error.hpp"
#include "tobit_iht/model.hpp"

namespace tobit {

void DistConfig::check(Index delta_len) const {
  require(outer_rounds >= 1, "outer_rounds (Q) must be at least 1");
  require(!(central_warm_start && init), "central_warm_start and init are exclusive");
  IhtConfig probe = inner;
  probe.init = init;
  probe.check(delta_len);
}

Worker::Worker(Shard shard) : shard_(std::move(shard)) {}

GradientResponse Worker::handle(const GradientRequest& request) const {
  return {shard_.machine_id, local_gradient(shard_, request.theta_bar), shard_.data.n()};
}

InProcessTransport::InProcessTransport(std::vector<Worker> workers)
    : workers_(std::move(workers)) {}

std::vector<int> InProcessTransport::machine_ids() const {
  std::vector<int> ids;
  ids.reserve(workers_.size());
  for (const auto& w : workers_) ids.push_back(w.machine_id());
  return ids;
}

std::vector<GradientResponse> InProcessTransport::broadcast(const GradientRequest& request) {
  std::vector<std::future<GradientResponse>> pending;
  pending.reserve(workers_.size());
  for (const auto& w : workers_) {
    pending.push_back(std::async(std::launch::async,
                                 [&w, &request] { return w.handle(request); }));
  }
  std::vector<GradientResponse> out;
  out.reserve(pending.size());
  for (auto& f : pending) out.push_back(f.get());
  return out;
}

Vector local_gradient(const Shard& shard, const Theta& theta_bar) {
  return gradient(theta_bar, shard.data);
}

namespace {

Vector pairwise_combine(const std::vector<Vector>& terms, std::size_t lo, std::size_t len) {
  if (len == 1) return terms[lo];
  const std::size_t half = len / 2;
  Vector left = pairwise_combine(terms, lo, half);
  left += pairwise_combine(terms, lo + half, len - half);
  return left;
}

}  // namespace

Vector aggregate_gradients(std::span<const GradientResponse> responses,
                           int expected_machines) {
  require(expected_machines >= 1, "aggregate_gradients: need at least one machine");
  std::vector<const GradientResponse*> by_id(static_cast<std::size_t>(expected_machines), nullptr);
  for (const auto& r : responses) {
    if (r.machine_id < 0 || r.machine_id >= expected_machines) {
      fail(ErrorKind::protocol,
           "aggregate_gradients: unexpected machine id " + std::to_string(r.machine_id));
    }
    auto& slot = by_id[static_cast<std::size_t>(r.machine_id)];
    if (slot != nullptr) {
      fail(ErrorKind::protocol,
           "aggregate_gradients: duplicate response from machine " + std::to_string(r.machine_id));
    }
    slot = &r;
  }
  Index total = 0;
  Index len = -1;
  for (int m = 0; m < expected_machines; ++m) {
    const auto* r = by_id[static_cast<std::size_t>(m)];
    if (r == nullptr) {
      fail(ErrorKind::incomplete_round,
           "aggregate_gradients: no response from machine " + std::to_string(m));
    }
    if (len < 0) len = r->gradient.size();
    if (r->gradient.size() != len) {
      fail(ErrorKind::protocol, "aggregate_gradients: machine " + std::to_string(m) +
                                    " sent a vector of length " +
                                    std::to_string(r->gradient.size()) + ", expected " +
                                    std::to_string(len));
    }
    require(r->n_rows >= 1, "aggregate_gradients: machine " + std::to_string(m) +
                                " reported an empty shard", ErrorKind::protocol);
    total += r->n_rows;
  }
  std::vector<Vector> weighted;
  weighted.reserve(by_id.size());
  for (const auto* r : by_id) {
    const double w = static_cast<double>(r->n_rows) / static_cast<double>(total);
    weighted.push_back(w * r->gradient);
  }
  return pairwise_combine(weighted, 0, weighted.size());
}

SurrogateLoss::SurrogateLoss(const CensoredDataset& central, const Theta& theta_bar,
                             const Vector& global_grad_at_bar)
    : central_(central) {
  Vector local = gradient(theta_bar, central_);
  if (local.size() != global_grad_at_bar.size()) {
    fail(ErrorKind::protocol, "surrogate: global gradient has length " +
                                  std::to_string(global_grad_at_bar.size()) +
                                  ", expected " + std::to_string(local.size()));
  }
  correction_ = local - global_grad_at_bar;
}

double SurrogateLoss::value(const Theta& theta) const {
  return nll(theta, central_) - theta.stacked().dot(correction_);
}

std::pair<double, Vector> SurrogateLoss::value_and_gradient(const Theta& theta) const {
  auto [f, g] = nll_and_gradient(theta, central_);
  f -= theta.stacked().dot(correction_);
  g -= correction_;
  return {f, std::move(g)};
}

double SurrogateLoss::step_size(const Theta& theta, const Vector& grad, Index s) const {
  // The correction is linear, so the surrogate Hessian is the central one.
  return auto_step_size(central_, theta, grad, s);
}

Vector surrogate_gradient(const Theta& theta, const Theta& theta_bar,
                          const Shard& central, const Vector& global_grad_at_bar) {
  require(theta.dim() == theta_bar.dim(), "surrogate_gradient: theta dimensions differ",
          ErrorKind::protocol);
  SurrogateLoss loss(central.data, theta_bar, global_grad_at_bar);
  return loss.value_and_gradient(theta).second;
}

DistFitResult fit_distributed(const Shard& central, Transport& transport,
                              const DistConfig& config) {
  validate(central.data);
  require(central.machine_id == 0, "the central shard must have machine_id 0");
  const Index p = central.data.x().cols();
  config.check(p);

  const auto others = transport.machine_ids();
  const int machines = static_cast<int>(others.size()) + 1;
  const auto t_begin = std::chrono::steady_clock::now();

  DistFitResult out;
  IhtConfig inner = config.inner;
  inner.init.reset();
  Theta theta = config.init ? *config.init : cold_start(central.data.d(), config.inner.c_star);
  if (config.central_warm_start) {
    IhtConfig local = inner;
    local.trace_thetas = false;
    const FitResult warm = fit(central.data, local);
    out.warm_start_iterations = warm.iterations_run;
    theta = warm.theta;
  }

  for (int q = 0; q < config.outer_rounds; ++q) {
    const GradientRequest request{q, theta};
    std::vector<GradientResponse> responses = transport.broadcast(request);
    responses.push_back({0, local_gradient(central, theta), central.data.n()});
    const Vector global = aggregate_gradients(responses, machines);

    out.comm.rounds += 1;
    out.comm.vectors_sent += 2 * static_cast<std::int64_t>(machines - 1);

    const SurrogateLoss loss(central.data, theta, global);
    const Vector at_anchor = loss.value_and_gradient(theta).second;
    out.anchors.push_back({q, (at_anchor - global).lpNorm<Eigen::Infinity>()});

    // Trace values within a round are that round's surrogate objective.
    if (q == 0) {
      const double f0 = loss.value(theta);
      if (!std::isfinite(f0)) fail(ErrorKind::divergence, "non-finite objective at (q=0, t=0)");
      out.fit.trace.push_back({0, 0, f0, 0.0, nonzero_support(theta.delta), 0.0});
      if (inner.trace_thetas) out.fit.thetas.push_back(theta);
    }

    FitResult round = detail::run_iht(loss, inner, theta, q, false);
    out.fit.iterations_run += round.iterations_run;
    out.fit.converged = round.converged;
    out.fit.stalled = out.fit.stalled || round.stalled;
    for (auto& rec : round.trace) out.fit.trace.push_back(std::move(rec));
    for (auto& th : round.thetas) out.fit.thetas.push_back(std::move(th));
    theta = std::move(round.theta);
  }

  out.comm.bytes_estimate = out.comm.vectors_sent * (p + 1) * 8;
  out.fit.theta = std::move(theta);
  out.fit.wall_time = std::chrono::steady_clock::now() - t_begin;
  return out;
}

DistFitResult fit_distributed(std::span<const Shard> shards, const DistConfig& config) {
  require(!shards.empty(), "fit_distributed: no shards");
  std::vector<int> ids;
  for (const auto& s : shards) {
    try {
      validate(s.data);
    } catch (const Error& e) {
      throw Error(e.kind(), "shard " + std::to_string(s.machine_id) + ": " + e.what());
    }
    require(s.data.x().cols() == shards[0].data.x().cols(),
            "shard " + std::to_string(s.machine_id) + " has a different number of columns");
    ids.push_back(s.machine_id);
  }
  require(shards[0].machine_id == 0, "shards[0] must be the central machine (id 0)");
  std::vector<int> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t m = 0; m < sorted.size(); ++m) {
    require(sorted[m] == static_cast<int>(m),
            "machine ids must be exactly 0..M-1 without duplicates");
  }

  std::vector<Worker> workers;
  for (std::size_t m = 1; m < shards.size(); ++m) workers.emplace_back(shards[m]);
  InProcessTransport transport(std::move(workers));
  return fit_distributed(shards[0], transport, config);
}

int recommended_rounds(Index n, Index big_n) {
  require(n >= 1, "recommended_rounds: n must be at least 1");
  require(n <= big_n, "recommended_rounds: n must not exceed N");
  if (n == big_n) return 1;
  require(n >= 2, "recommended_rounds: n = 1 < N gives no finite round count");
  int q = 1;
  // Exact integer search for the smallest q with n^q >= N.
  long double power = static_cast<long double>(n);
  while (power < static_cast<long double>(big_n)) {
    power *= static_cast<long double>(n);
    ++q;
  }
  return q;
}

}  // namespace tobit
