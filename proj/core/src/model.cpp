#include "tobit_iht/model.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "tobit_iht/error.hpp"
#include "tobit_iht/special.hpp"

namespace tobit {
namespace detail {
namespace {

constexpr std::size_t kSumLeaf = 32;
constexpr Index kRowBlock = 64;

double pairwise_sum_range(const double* v, std::size_t len) {
  if (len <= kSumLeaf) {
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += v[i];
    return acc;
  }
  const std::size_t half = len / 2;
  return pairwise_sum_range(v, half) + pairwise_sum_range(v + half, len - half);
}

Vector weighted_rows(const Matrix& x, const Vector& w, Index lo, Index len) {
  if (len <= kRowBlock) {
    return x.middleRows(lo, len).transpose() * w.segment(lo, len);
  }
  const Index half = len / 2;
  Vector left = weighted_rows(x, w, lo, half);
  left += weighted_rows(x, w, lo + half, len - half);
  return left;
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  return pairwise_sum_range(values.data(), values.size());
}

Vector pairwise_weighted_row_sum(const Matrix& x, const Vector& w) {
  if (x.rows() == 0) return Vector::Zero(x.cols());
  return weighted_rows(x, w, 0, x.rows());
}

void require_positive_gamma(double gamma, const char* fn) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    fail(ErrorKind::invalid_argument,
         std::string(fn) + ": gamma must be positive and finite, got " +
             std::to_string(gamma));
  }
}

}  // namespace detail

namespace {

void check_dims(const Theta& theta, const CensoredDataset& data, const char* fn) {
  detail::require_positive_gamma(theta.gamma, fn);
  if (theta.delta.size() != data.x().cols()) {
    fail(ErrorKind::invalid_argument,
         std::string(fn) + ": delta has length " +
             std::to_string(theta.delta.size()) + ", dataset expects " +
             std::to_string(data.x().cols()));
  }
}

}  // namespace

Vector linear_predictor(const Vector& delta, const CensoredDataset& data) {
  const Matrix& x = data.x();
  Vector r = Vector::Zero(x.rows());
  for (Index j = 0; j < delta.size(); ++j) {
    if (delta[j] != 0.0) r.noalias() += delta[j] * x.col(j);
  }
  return r;
}

double nll(const Theta& theta, const CensoredDataset& data) {
  check_dims(theta, data, "nll");
  const Vector r = linear_predictor(theta.delta, data);
  const Index n = data.n();
  const double log_gamma = std::log(theta.gamma);
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    if (data.censored(i)) {
      terms[static_cast<std::size_t>(i)] = -special::log_phi_cdf(-r[i]);
    } else {
      const double res = theta.gamma * data.y()[i] - r[i];
      terms[static_cast<std::size_t>(i)] = -log_gamma + 0.5 * res * res;
    }
  }
  return detail::pairwise_sum(terms) / static_cast<double>(n);
}

std::pair<double, Vector> nll_and_gradient(const Theta& theta,
                                           const CensoredDataset& data) {
  check_dims(theta, data, "gradient");
  const Vector r = linear_predictor(theta.delta, data);
  const Index n = data.n();
  const double log_gamma = std::log(theta.gamma);
  const double inv_gamma = 1.0 / theta.gamma;

  std::vector<double> loss(static_cast<std::size_t>(n));
  std::vector<double> dgamma(static_cast<std::size_t>(n));
  Vector w(n);
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (data.censored(i)) {
      loss[k] = -special::log_phi_cdf(-r[i]);
      w[i] = special::mills_g(-r[i]);
      dgamma[k] = 0.0;
    } else {
      const double y = data.y()[i];
      const double res = theta.gamma * y - r[i];
      loss[k] = -log_gamma + 0.5 * res * res;
      w[i] = -res;
      dgamma[k] = -(inv_gamma - y * res);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  Vector grad(data.x().cols() + 1);
  grad.head(data.x().cols()) = detail::pairwise_weighted_row_sum(data.x(), w) * inv_n;
  grad[data.x().cols()] = detail::pairwise_sum(dgamma) * inv_n;
  return {detail::pairwise_sum(loss) * inv_n, std::move(grad)};
}

Vector gradient(const Theta& theta, const CensoredDataset& data) {
  return nll_and_gradient(theta, data).second;
}

Matrix hessian(const Theta& theta, const CensoredDataset& data,
               std::optional<std::span<const Index>> delta_support) {
  check_dims(theta, data, "hessian");
  const Index p = data.x().cols();
  std::vector<Index> cols;
  if (delta_support) {
    for (Index j : *delta_support) {
      if (j < 0 || j >= p) {
        fail(ErrorKind::invalid_argument,
             "hessian: support index " + std::to_string(j) +
                 " out of range [0, " + std::to_string(p) + ")");
      }
      cols.push_back(j);
    }
  } else {
    cols.resize(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) cols[static_cast<std::size_t>(j)] = j;
  }

  const Index n = data.n();
  const Index k = static_cast<Index>(cols.size());
  const Vector r = linear_predictor(theta.delta, data);

  // Per row the contribution is w_i z_i z_i' with z_i = (x_iS, -d_i y_i),
  // w_i = 1 (uncensored) or h(-x_i'delta) (censored), plus d_i/gamma^2 on
  // the gamma diagonal.
  Matrix z(n, k + 1);
  for (Index c = 0; c < k; ++c) z.col(c) = data.x().col(cols[static_cast<std::size_t>(c)]);
  Vector w(n);
  for (Index i = 0; i < n; ++i) {
    if (data.censored(i)) {
      w[i] = special::mills_h(-r[i]);
      z(i, k) = 0.0;
    } else {
      w[i] = 1.0;
      z(i, k) = -data.y()[i];
    }
  }
  const Matrix wz = w.asDiagonal() * z;
  Matrix h = z.transpose() * wz;
  h(k, k) += static_cast<double>(data.uncensored_count()) / (theta.gamma * theta.gamma);
  h /= static_cast<double>(n);
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose().triangularView<Eigen::StrictlyUpper>();
  return h;
}

ModelParams theta_to_params(const Theta& theta) {
  detail::require_positive_gamma(theta.gamma, "theta_to_params");
  return ModelParams{theta.delta / theta.gamma, 1.0 / theta.gamma};
}

Theta params_to_theta(const ModelParams& params) {
  if (!(params.sigma > 0.0) || !std::isfinite(params.sigma)) {
    fail(ErrorKind::invalid_argument,
         "params_to_theta: sigma must be positive, got " + std::to_string(params.sigma));
  }
  return Theta{params.beta / params.sigma, 1.0 / params.sigma};
}

Prediction predict(const Theta& theta, std::span<const double> x_row, double c0) {
  detail::require_positive_gamma(theta.gamma, "predict");
  if (static_cast<Index>(x_row.size()) != theta.delta.size()) {
    fail(ErrorKind::invalid_argument,
         "predict: row has length " + std::to_string(x_row.size()) +
             ", expected " + std::to_string(theta.delta.size()));
  }
  const ModelParams p = theta_to_params(theta);
  double mu = 0.0;
  for (std::size_t j = 0; j < x_row.size(); ++j) mu += x_row[j] * p.beta[static_cast<Index>(j)];
  // mu is on the shifted scale: E max(y*, c0) = c0 + mu Phi(a) + sigma phi(a).
  const double a = mu / p.sigma;
  const double cdf = std::exp(special::log_phi_cdf(a));
  const double censored_mean = c0 + mu * cdf + p.sigma * special::normal_pdf(a);
  return Prediction{mu + c0, censored_mean};
}

}  // namespace tobit
