#include "tobit_iht/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tobit_iht/error.hpp"

namespace tobit {

Vector Theta::stacked() const {
  Vector v(dim());
  v.head(delta.size()) = delta;
  v[delta.size()] = gamma;
  return v;
}

Theta Theta::from_stacked(const Vector& v) {
  require(v.size() >= 1, "Theta::from_stacked: empty vector");
  return Theta{v.head(v.size() - 1), v[v.size() - 1]};
}

std::vector<Index> nonzero_support(const Vector& v) {
  std::vector<Index> out;
  for (Index j = 0; j < v.size(); ++j) {
    if (v[j] != 0.0) out.push_back(j);
  }
  return out;
}

CensoredDataset::CensoredDataset(Matrix x, Vector y, double c0) : c0_(c0) {
  require(x.rows() == y.size(),
          "CensoredDataset: x has " + std::to_string(x.rows()) +
              " rows but y has " + std::to_string(y.size()),
          ErrorKind::schema);
  require(x.cols() >= 1, "CensoredDataset: x has no intercept column",
          ErrorKind::schema);
  const Index n = x.rows();

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const bool all_finite = x.allFinite() && y.allFinite() && std::isfinite(c0);
  if (all_finite) {
    // Canonical order: (y, then x row lexicographically). Equal keys mean
    // identical rows, so their relative order cannot change any sum.
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      if (y[a] != y[b]) return y[a] < y[b];
      for (Index j = 0; j < x.cols(); ++j) {
        if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
      }
      return false;
    });
  }

  x_.resize(n, x.cols());
  y_.resize(n);
  censored_.resize(static_cast<std::size_t>(n));
  source_ = order;
  for (Index i = 0; i < n; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    x_.row(i) = x.row(src);
    const bool cens = y[src] <= c0;
    censored_[static_cast<std::size_t>(i)] = cens ? 1 : 0;
    y_[i] = y[src] - c0;
    if (!cens) ++uncensored_;
  }
}

CensoredDataset CensoredDataset::from_features(const Matrix& features,
                                               const Vector& y, double c0) {
  Matrix x(features.rows(), features.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(features.cols()) = features;
  return CensoredDataset(std::move(x), y, c0);
}

std::vector<Index> CensoredDataset::input_order() const {
  std::vector<Index> pos(source_.size());
  for (std::size_t i = 0; i < source_.size(); ++i) {
    pos[static_cast<std::size_t>(source_[i])] = static_cast<Index>(i);
  }
  return pos;
}

CensoredDataset CensoredDataset::subset(std::span<const Index> input_rows) const {
  const auto pos = input_order();
  Matrix x(static_cast<Index>(input_rows.size()), x_.cols());
  Vector y(static_cast<Index>(input_rows.size()));
  for (std::size_t k = 0; k < input_rows.size(); ++k) {
    const Index r = input_rows[k];
    require(r >= 0 && r < n(), "CensoredDataset::subset: row " +
                                   std::to_string(r) + " out of range");
    const Index i = pos[static_cast<std::size_t>(r)];
    x.row(static_cast<Index>(k)) = x_.row(i);
    y[static_cast<Index>(k)] = observed_y(i);
  }
  return CensoredDataset(std::move(x), std::move(y), c0_);
}

Matrix CensoredDataset::features_in_input_order() const {
  const auto pos = input_order();
  Matrix out(n(), d());
  for (Index r = 0; r < n(); ++r) {
    out.row(r) = x_.row(pos[static_cast<std::size_t>(r)]).tail(d());
  }
  return out;
}

Vector CensoredDataset::observed_y_in_input_order() const {
  const auto pos = input_order();
  Vector out(n());
  for (Index r = 0; r < n(); ++r) out[r] = observed_y(pos[static_cast<std::size_t>(r)]);
  return out;
}

void validate(const CensoredDataset& data) {
  require(data.n() >= 1, "dataset is empty", ErrorKind::data);
  require(data.x().cols() >= 1, "dataset has no intercept column",
          ErrorKind::schema);
  require(std::isfinite(data.c0()), "censoring threshold is not finite",
          ErrorKind::data);
  for (Index i = 0; i < data.n(); ++i) {
    if (data.x()(i, 0) != 1.0) {
      fail(ErrorKind::schema, "column 0 is not an all-ones intercept (row " +
                                  std::to_string(data.source_index(i)) + ")");
    }
  }
  for (Index i = 0; i < data.n(); ++i) {
    const Index src = data.source_index(i);
    if (!data.x().row(i).allFinite() || !std::isfinite(data.y()[i])) {
      fail(ErrorKind::data, "non-finite entry in row " + std::to_string(src));
    }
    if (data.y()[i] < 0.0) {
      fail(ErrorKind::data, "row " + std::to_string(src) +
                                ": response below the censoring threshold");
    }
  }
  if (data.uncensored_count() == 0) {
    fail(ErrorKind::gamma_unidentifiable,
         "gamma-unidentifiable: every row is censored");
  }
}

}  // namespace tobit
