#include "tobit_iht/solver_local.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "tobit_iht/error.hpp"
#include "tobit_iht/model.hpp"

namespace tobit {

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

constexpr int kMaxHalvings = 30;
constexpr double kDescentSlack = 1e-12;

class DataObjective final : public detail::IhtObjective {
 public:
  explicit DataObjective(const CensoredDataset& data) : data_(data) {}

  double value(const Theta& theta) const override { return nll(theta, data_); }
  std::pair<double, Vector> value_and_gradient(const Theta& theta) const override {
    return nll_and_gradient(theta, data_);
  }
  double step_size(const Theta& theta, const Vector& grad, Index s) const override {
    return auto_step_size(data_, theta, grad, s);
  }

 private:
  const CensoredDataset& data_;
};

// round < 0 marks the centralized solver.
std::string where(int round, int iter) {
  if (round < 0) return "iteration " + std::to_string(iter);
  return "(q=" + std::to_string(round) + ", t=" + std::to_string(iter) + ")";
}

}  // namespace

void IhtConfig::check(Index delta_len) const {
  projection().check(delta_len);
  require(max_iters >= 0, "max_iters must be nonnegative");
  require(tol >= 0.0, "tol must be nonnegative");
  if (eta) require(*eta > 0.0 && std::isfinite(*eta), "eta must be positive");
  if (init) {
    require(init->delta.size() == delta_len,
            "init has " + std::to_string(init->delta.size()) +
                " delta coordinates, expected " + std::to_string(delta_len));
    const auto nnz = static_cast<Index>(nonzero_support(init->delta).size());
    require(nnz <= s, "init has " + std::to_string(nnz) +
                          " nonzero delta coordinates, more than s = " + std::to_string(s));
    require(init->gamma >= c_star, "init gamma is below c_star");
  }
}

Theta cold_start(Index d, double c_star) {
  require(d >= 0, "cold_start: d must be nonnegative");
  require(c_star > 0.0, "cold_start: c_star must be positive");
  return Theta{Vector::Zero(d + 1), c_star};
}

Theta iht_step(const Theta& theta, const Vector& grad, double eta,
               const ProjectionSpec& spec) {
  require(grad.size() == theta.dim(),
          "iht_step: gradient has length " + std::to_string(grad.size()) +
              ", expected " + std::to_string(theta.dim()));
  require(eta > 0.0, "iht_step: eta must be positive");
  const Index p = theta.delta.size();
  return project(theta.delta - eta * grad.head(p), theta.gamma - eta * grad[p], spec);
}

double auto_step_size(const CensoredDataset& data, const Theta& theta0,
                      const Vector& grad_at_theta0, Index s) {
  const Index p = theta0.delta.size();
  require(grad_at_theta0.size() == p + 1, "auto_step_size: gradient length mismatch");
  require(s >= 0, "auto_step_size: s must be nonnegative");

  std::vector<Index> coords = nonzero_support(theta0.delta);
  const Index take = std::min<Index>(2 * s, p);
  if (take > 0) {
    std::vector<Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](Index a, Index b) {
      const double ma = std::abs(grad_at_theta0[a]);
      const double mb = std::abs(grad_at_theta0[b]);
      if (ma != mb) return ma > mb;
      return a < b;
    });
    coords.insert(coords.end(), idx.begin(), idx.begin() + take);
  }
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());

  const Matrix h = hessian(theta0, data, std::span<const Index>(coords));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = std::max(eig.eigenvalues().minCoeff(), 1e-6 * lmax);
  const double eta = 2.0 / (lmin + lmax);
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    fail(ErrorKind::divergence, "auto_step_size: restricted Hessian gave step " +
                                    shortest(eta));
  }
  return eta;
}

double auto_step_size(const CensoredDataset& data, const Theta& theta0, Index s) {
  validate(data);
  return auto_step_size(data, theta0, gradient(theta0, data), s);
}

namespace detail {

FitResult run_iht(const IhtObjective& objective, const IhtConfig& config,
                  const Theta& start, int round, bool emit_initial) {
  const auto t_begin = std::chrono::steady_clock::now();
  const ProjectionSpec spec = config.projection();

  FitResult out;
  const int tag = std::max(round, 0);
  Theta theta = start;
  double f = objective.value(theta);
  if (!std::isfinite(f)) {
    fail(ErrorKind::divergence, "non-finite objective at " + where(round, 0));
  }
  if (emit_initial) {
    out.trace.push_back({tag, 0, f, 0.0, nonzero_support(theta.delta), 0.0});
    if (config.trace_thetas) out.thetas.push_back(theta);
  }

  for (int t = 0; t < config.max_iters; ++t) {
    auto [f_here, grad] = objective.value_and_gradient(theta);
    (void)f_here;
    const double base_eta =
        config.eta ? *config.eta : objective.step_size(theta, grad, config.s);

    double eta = base_eta;
    Theta cand = iht_step(theta, grad, eta, spec);
    double fc = objective.value(cand);
    bool stalled = false;
    if (config.backtracking) {
      int halvings = 0;
      while (!(fc <= f + kDescentSlack) && halvings < kMaxHalvings) {
        eta *= 0.5;
        cand = iht_step(theta, grad, eta, spec);
        fc = objective.value(cand);
        ++halvings;
      }
      if (!(fc <= f + kDescentSlack)) {
        stalled = true;
        cand = theta;
        fc = f;
      }
    }
    if (!std::isfinite(fc)) {
      fail(ErrorKind::divergence, "non-finite objective at " + where(round, t + 1) +
                                      " (eta = " + shortest(eta) + ")");
    }

    const double step = std::sqrt((cand.delta - theta.delta).squaredNorm() +
                                  (cand.gamma - theta.gamma) * (cand.gamma - theta.gamma));
    theta = std::move(cand);
    f = fc;
    ++out.iterations_run;
    out.trace.push_back({tag, t + 1, f, step, nonzero_support(theta.delta), eta});
    if (config.trace_thetas) out.thetas.push_back(theta);

    if (stalled) {
      out.stalled = true;
      out.converged = true;
      break;
    }
    if (step < config.tol) {
      out.converged = true;
      break;
    }
  }

  out.theta = std::move(theta);
  out.wall_time = std::chrono::steady_clock::now() - t_begin;
  return out;
}

}  // namespace detail

FitResult fit(const CensoredDataset& data, const IhtConfig& config) {
  validate(data);
  config.check(data.x().cols());
  const Theta start = config.init ? *config.init : cold_start(data.d(), config.c_star);
  DataObjective objective(data);
  return detail::run_iht(objective, config, start, -1, true);
}

}  // namespace tobit
