#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "test_support.hpp"

using namespace tobit;
using tobit::testing::random_dataset;
using tobit::testing::single_row;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index j = 0;
  for (double x : xs) v[j++] = x;
  return v;
}

GenSpec strong_signal(std::uint64_t seed) {
  GenSpec g;
  g.n = 500;
  g.d = 100;
  g.s0 = 3;
  g.beta0 = 0.0;
  g.signal_strength = 2.0;
  g.sigma_star = 0.5;
  g.seed = seed;
  return g;
}

}  // namespace

TEST(ColdStart, Shape) {
  const Theta t = cold_start(3, 0.001);
  EXPECT_EQ(t.delta, Vector::Zero(4));
  EXPECT_EQ(t.gamma, 0.001);
}

TEST(ColdStart, FeasibleForAnyBudget) {
  for (Index s = 0; s <= 4; ++s) {
    const Theta t = cold_start(3, 0.01);
    EXPECT_LE(static_cast<Index>(nonzero_support(t.delta).size()), s + 1);
    EXPECT_GE(t.gamma, 0.01);
  }
}

TEST(ColdStart, NllOnSingleCensoredRow) {
  EXPECT_NEAR(nll(cold_start(0, 0.001), single_row(1.0, 0.0)), std::log(2.0), 1e-15);
}

TEST(IhtStep, ZeroGradientIsProjection) {
  Theta t{vec({0, 1.5, -0.2}), 0.7};
  const ProjectionSpec spec{2, 0.001, false};
  EXPECT_EQ(iht_step(t, Vector::Zero(4), 0.3, spec), t);
}

TEST(IhtStep, OneStepArithmetic) {
  const Theta t{vec({0, 0}), 1.0};
  const Theta next = iht_step(t, vec({-1, -2, 0}), 1.0, {1, 0.001, false});
  EXPECT_EQ(next.delta, vec({0, 2}));
  EXPECT_EQ(next.gamma, 1.0);
}

TEST(IhtStep, TruncationEngages) {
  const Theta t{vec({0}), 0.002};
  const Theta next = iht_step(t, vec({0, 10}), 0.001, {1, 0.001, false});
  EXPECT_EQ(next.gamma, 0.001);
}

TEST(IhtStep, DimensionMismatch) {
  const Theta t{vec({0, 0}), 1.0};
  EXPECT_THROW(iht_step(t, vec({1, 2}), 1.0, {1, 0.001, false}), Error);
  EXPECT_THROW(iht_step(t, vec({1, 2, 3}), 0.0, {1, 0.001, false}), Error);
}

TEST(AutoStep, SingleUncensoredRow) {
  const Theta t{vec({0}), 1.0};
  EXPECT_NEAR(auto_step_size(single_row(1.0, 2.0), t, 1), 1.0 / 3.0, 1e-15);
}

TEST(AutoStep, RowDuplicationInvariant) {
  const CensoredDataset data = random_dataset(17, 60, 15);
  const Matrix f = data.features_in_input_order();
  const Vector y = data.observed_y_in_input_order();
  Matrix f2(120, 15);
  Vector y2(120);
  f2 << f, f;
  y2 << y, y;
  const CensoredDataset doubled = CensoredDataset::from_features(f2, y2);
  for (const Theta& t : {cold_start(15, 0.001), Theta{Vector::Constant(16, 0.1), 1.3}}) {
    const double a = auto_step_size(data, t, 4);
    const double b = auto_step_size(doubled, t, 4);
    EXPECT_NEAR(a, b, 1e-12 * a);
  }
}

TEST(AutoStep, DescendsWithoutBacktrackingMostly) {
  int steps = 0, descending = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GeneratedData data = generate(strong_signal(seed));
    IhtConfig cfg;
    cfg.s = 3;
    cfg.backtracking = false;
    cfg.max_iters = 300;
    const FitResult fit = tobit::fit(data.pooled, cfg);
    for (std::size_t t = 1; t < fit.trace.size(); ++t) {
      ++steps;
      if (fit.trace[t].nll <= fit.trace[t - 1].nll) ++descending;
    }
  }
  EXPECT_GE(descending, 0.9 * steps) << descending << "/" << steps;
}

TEST(Fit, ZeroIterationsReturnsStart) {
  const CensoredDataset data = random_dataset(4, 30, 5);
  IhtConfig cfg;
  cfg.s = 2;
  cfg.max_iters = 0;
  FitResult fit = tobit::fit(data, cfg);
  EXPECT_EQ(fit.theta, cold_start(5, cfg.c_star));
  EXPECT_EQ(fit.trace.size(), 1u);
  EXPECT_EQ(fit.iterations_run, 0);

  cfg.init = Theta{vec({0.2, 0, 0, -0.1, 0, 0}), 0.9};
  fit = tobit::fit(data, cfg);
  EXPECT_EQ(fit.theta, *cfg.init);
}

TEST(Fit, InfeasibleInitRejected) {
  const CensoredDataset data = random_dataset(4, 30, 2);
  IhtConfig cfg;
  cfg.s = 1;
  cfg.init = Theta{vec({0.2, 0.1, 0}), 1.0};
  EXPECT_THROW(tobit::fit(data, cfg), Error);
  cfg.init = Theta{vec({0.2, 0, 0}), 1e-5};
  EXPECT_THROW(tobit::fit(data, cfg), Error);
}

TEST(Fit, InvalidConfigRejected) {
  const CensoredDataset data = random_dataset(4, 30, 2);
  IhtConfig cfg;
  cfg.s = 4;
  EXPECT_THROW(tobit::fit(data, cfg), Error);
  cfg.s = 1;
  cfg.max_iters = -1;
  EXPECT_THROW(tobit::fit(data, cfg), Error);
  cfg.max_iters = 10;
  cfg.eta = -0.5;
  EXPECT_THROW(tobit::fit(data, cfg), Error);
}

TEST(Fit, StrongSignalRecovery) {
  int good = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const GeneratedData data = generate(strong_signal(replication_seed(11, 500, rep)));
    IhtConfig cfg;
    cfg.s = 3;
    const FitResult fit = tobit::fit(data.pooled, cfg);
    const Metrics m = compute_metrics(fit.theta, data.truth);
    if (m.exact_support && m.l2_beta <= 0.15) ++good;
  }
  EXPECT_GE(good, 48);
}

TEST(Fit, MonotoneWithBacktracking) {
  for (int rep = 0; rep < 20; ++rep) {
    GenSpec g = strong_signal(replication_seed(12, 300, rep));
    g.n = 300;
    g.d = 60;
    const GeneratedData data = generate(g);
    IhtConfig cfg;
    cfg.s = 3;
    cfg.max_iters = 200;
    const FitResult fit = tobit::fit(data.pooled, cfg);
    for (std::size_t t = 1; t < fit.trace.size(); ++t) {
      EXPECT_LE(fit.trace[t].nll, fit.trace[t - 1].nll + 1e-12) << "rep " << rep << " t " << t;
    }
  }
}

TEST(Fit, EveryIterateFeasible) {
  const GeneratedData data = generate(strong_signal(3));
  IhtConfig cfg;
  cfg.s = 4;
  cfg.max_iters = 5000;
  cfg.trace_thetas = true;
  const FitResult fit = tobit::fit(data.pooled, cfg);
  ASSERT_EQ(fit.thetas.size(), fit.trace.size());
  EXPECT_EQ(fit.trace.size(), static_cast<std::size_t>(fit.iterations_run) + 1);
  for (std::size_t t = 0; t < fit.trace.size(); ++t) {
    EXPECT_LE(static_cast<Index>(fit.trace[t].support.size()), cfg.s);
    EXPECT_EQ(fit.trace[t].support, nonzero_support(fit.thetas[t].delta));
    EXPECT_GE(fit.thetas[t].gamma, cfg.c_star);
    EXPECT_TRUE(std::isfinite(fit.trace[t].nll));
  }
  EXPECT_TRUE(fit.converged);
}

TEST(Fit, ExactTWhenToleranceZero) {
  const CensoredDataset data = random_dataset(8, 50, 6);
  IhtConfig cfg;
  cfg.s = 3;
  cfg.tol = 0.0;
  cfg.max_iters = 37;
  const FitResult fit = tobit::fit(data, cfg);
  EXPECT_EQ(fit.iterations_run, 37);
  EXPECT_EQ(fit.trace.size(), 38u);
}

TEST(Fit, Deterministic) {
  const GeneratedData data = generate(strong_signal(5));
  IhtConfig cfg;
  cfg.s = 3;
  const FitResult a = tobit::fit(data.pooled, cfg);
  const FitResult b = tobit::fit(data.pooled, cfg);
  EXPECT_EQ(a.theta, b.theta);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t t = 0; t < a.trace.size(); ++t) {
    EXPECT_EQ(a.trace[t].nll, b.trace[t].nll);
    EXPECT_EQ(a.trace[t].step_norm, b.trace[t].step_norm);
    EXPECT_EQ(a.trace[t].eta_used, b.trace[t].eta_used);
    EXPECT_EQ(a.trace[t].support, b.trace[t].support);
  }
}

TEST(Fit, ConvergedIterateIsFixedPoint) {
  const GeneratedData data = generate(strong_signal(6));
  IhtConfig cfg;
  cfg.s = 3;
  cfg.tol = 1e-12;
  cfg.max_iters = 20000;
  const FitResult fit = tobit::fit(data.pooled, cfg);
  ASSERT_TRUE(fit.converged);
  // at the limit the IHT map reproduces the iterate up to rounding
  const Vector g = gradient(fit.theta, data.pooled);
  const Theta next = iht_step(fit.theta, g, fit.trace.back().eta_used, cfg.projection());
  EXPECT_LE((next.stacked() - fit.theta.stacked()).norm(), 1e-11);
  EXPECT_EQ(nonzero_support(next.delta), nonzero_support(fit.theta.delta));
}

TEST(Fit, DivergenceNamesIteration) {
  const CensoredDataset data = random_dataset(3, 200, 20);
  IhtConfig cfg;
  cfg.s = 3;
  cfg.eta = 1e200;
  cfg.backtracking = false;
  cfg.max_iters = 10;
  try {
    tobit::fit(data, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::divergence);
    EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos) << e.what();
  }
}

TEST(Fit, ValidationErrorsPropagate) {
  Matrix f(3, 1);
  f << 0.1, 0.2, 0.3;
  const CensoredDataset all_censored = CensoredDataset::from_features(f, Vector::Zero(3));
  IhtConfig cfg;
  cfg.s = 1;
  try {
    tobit::fit(all_censored, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::gamma_unidentifiable);
  }
}

TEST(Fit, ContractsFromLocalStart) {
  // Start inside the local region: delta = 0, gamma = gamma*/2.
  int contracting = 0;
  for (int rep = 0; rep < 50; ++rep) {
    GenSpec g;
    g.n = 2000;
    g.d = 200;
    g.s0 = 5;
    g.beta0 = 0.0;
    g.seed = replication_seed(13, 2000, rep);
    const GeneratedData data = generate(g);
    IhtConfig cfg;
    cfg.s = 5;
    cfg.trace_thetas = true;
    cfg.init = Theta{Vector::Zero(201), 0.5 * data.truth.theta().gamma};
    const FitResult fit = tobit::fit(data.pooled, cfg);
    double worst = 0.0;
    for (const auto& p : convergence_diagnostics(fit, fit.theta, cfg.tol)) {
      if (p.ratio) worst = std::max(worst, *p.ratio);
    }
    if (worst <= 0.95) ++contracting;
  }
  EXPECT_GE(contracting, 45);
}
