#pragma once

#include <optional>
#include <span>
#include <utility>

#include "tobit_iht/dataset.hpp"
#include "tobit_iht/types.hpp"

namespace tobit {

/// Average negative log-likelihood in the Olsen parameterization:
///
///   (1/n) sum_i  d_i [ -log gamma + (gamma y_i - x_i'delta)^2 / 2 ]
///              - (1 - d_i) log Phi(-x_i'delta)
///
/// with d_i = 1 for uncensored rows. Row contributions are reduced by
/// pairwise summation in the dataset's canonical row order.
double nll(const Theta& theta, const CensoredDataset& data);

/// Exact derivative of nll(), (d+2)-vector with the gamma component last.
Vector gradient(const Theta& theta, const CensoredDataset& data);

/// Both at once; shares the linear predictor.
std::pair<double, Vector> nll_and_gradient(const Theta& theta,
                                           const CensoredDataset& data);

/// Empirical Hessian of nll(). With `delta_support` given, the rows and
/// columns are restricted to those delta coordinates (in the given order)
/// followed by gamma; otherwise the full (d+2) x (d+2) matrix is returned.
Matrix hessian(const Theta& theta, const CensoredDataset& data,
               std::optional<std::span<const Index>> delta_support = std::nullopt);

/// X delta accumulated over the nonzero coordinates of delta only.
Vector linear_predictor(const Vector& delta, const CensoredDataset& data);

ModelParams theta_to_params(const Theta& theta);
Theta params_to_theta(const ModelParams& params);

struct Prediction {
  double latent_mean = 0.0;    ///< x'beta on the original scale
  double censored_mean = 0.0;  ///< E max(y*, c0)
};

/// `theta` is on the shifted (threshold 0) scale a fit returns; `c0` moves
/// both means back to the original scale. `x_row` includes the leading 1.
Prediction predict(const Theta& theta, std::span<const double> x_row,
                   double c0 = 0.0);

namespace detail {
/// Pairwise (tree) sum with a fixed 32-element leaf.
double pairwise_sum(std::span<const double> values);
/// sum_i w_i x_i over rows, reduced pairwise over fixed row blocks.
Vector pairwise_weighted_row_sum(const Matrix& x, const Vector& w);
void require_positive_gamma(double gamma, const char* fn);
}  // namespace detail

}  // namespace tobit
