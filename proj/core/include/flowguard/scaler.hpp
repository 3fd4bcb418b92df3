#pragma once

#include <span>
#include <vector>

#include "flowguard/matrix.hpp"

namespace flowguard {

/// Per-dimension centre and scale for robust scaling:
///   scaled = (x - median) / iqr,  iqr = Q3 - Q1.
/// Dimensions with zero IQR are only centred.
struct ScalerParams {
  std::vector<double> median;
  std::vector<double> iqr;

  std::size_t dims() const noexcept { return median.size(); }

  /// Median 0, IQR 1 in every dimension: transform is the identity.
  static ScalerParams identity(std::size_t dims);

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

/// Quantile with linear interpolation between order statistics
/// (position q * (n - 1) in the sorted sample). `sorted` must be ascending.
double quantile_linear(std::span<const double> sorted, double q);

/// Throws Error(EmptyMatrix) or Error(NonFiniteInput).
ScalerParams fit_scaler(const Matrix& rows);

/// Throws Error(DimensionMismatch).
std::vector<double> transform(const ScalerParams& params, std::span<const double> row);
Matrix transform(const ScalerParams& params, const Matrix& rows);

}  // namespace flowguard
