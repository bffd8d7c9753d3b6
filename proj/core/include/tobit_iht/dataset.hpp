#pragma once

#include <span>
#include <vector>

#include "tobit_iht/types.hpp"

namespace tobit {

/// Left-censored sample with an intercept column.
///
/// Responses are stored shifted by the threshold, so the stored data is
/// always censored at zero and `censored(i)` is fixed once at construction
/// from `y_raw <= c0`. Rows are held in a canonical order (lexicographic in
/// the row contents) so every reduction over rows is independent of the
/// order the rows were supplied in; `source_index(i)` maps a stored row back
/// to its input position.
class CensoredDataset {
 public:
  CensoredDataset() = default;

  /// `x` must already include the intercept column. Nothing is validated
  /// here beyond shape; call validate() before fitting.
  CensoredDataset(Matrix x, Vector y, double c0 = 0.0);

  /// Prepends the intercept column to an n x d feature matrix.
  static CensoredDataset from_features(const Matrix& features, const Vector& y,
                                       double c0 = 0.0);

  Index n() const { return x_.rows(); }
  /// Number of features, excluding the intercept.
  Index d() const { return x_.cols() - 1; }
  double c0() const { return c0_; }

  /// n x (d+1), canonical row order.
  const Matrix& x() const { return x_; }
  /// Shifted responses (threshold 0), canonical row order.
  const Vector& y() const { return y_; }
  bool censored(Index i) const { return censored_[static_cast<std::size_t>(i)] != 0; }
  const std::vector<std::uint8_t>& censored_mask() const { return censored_; }
  Index uncensored_count() const { return uncensored_; }

  Index source_index(Index i) const { return source_[static_cast<std::size_t>(i)]; }
  /// Stored row positions listed in input order.
  std::vector<Index> input_order() const;

  /// Response on the original scale.
  double observed_y(Index i) const { return y_[i] + c0_; }

  /// Rows selected by input position (as seen by the caller who built the
  /// dataset), in the given order.
  CensoredDataset subset(std::span<const Index> input_rows) const;

  /// Features (no intercept) and raw responses in input order.
  Matrix features_in_input_order() const;
  Vector observed_y_in_input_order() const;

 private:
  Matrix x_;
  Vector y_;
  std::vector<std::uint8_t> censored_;
  std::vector<Index> source_;
  double c0_ = 0.0;
  Index uncensored_ = 0;
};

/// Throws Error(schema) for a missing intercept column, Error(data) for
/// non-finite entries or responses below the threshold, and
/// Error(gamma_unidentifiable) when every row is censored.
void validate(const CensoredDataset& data);

}  // namespace tobit
