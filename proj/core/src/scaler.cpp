#include "flowguard/scaler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowguard/error.hpp"

namespace flowguard {

ScalerParams ScalerParams::identity(std::size_t dims) {
  return {std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0)};
}

double quantile_linear(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

ScalerParams fit_scaler(const Matrix& rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyMatrix, "scaler needs at least one row");
  const std::size_t dims = rows.cols();
  ScalerParams p;
  p.median.resize(dims);
  p.iqr.resize(dims);
  std::vector<double> column(rows.rows());
  for (std::size_t j = 0; j < dims; ++j) {
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      column[i] = rows(i, j);
      if (!std::isfinite(column[i])) {
        throw Error(ErrorCode::NonFiniteInput, "row " + std::to_string(i) + " column " + std::to_string(j));
      }
    }
    std::sort(column.begin(), column.end());
    p.median[j] = quantile_linear(column, 0.5);
    p.iqr[j] = std::max(0.0, quantile_linear(column, 0.75) - quantile_linear(column, 0.25));
  }
  return p;
}

std::vector<double> transform(const ScalerParams& params, std::span<const double> row) {
  if (row.size() != params.dims()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(params.dims()) + " values, got " + std::to_string(row.size()));
  }
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double scale = params.iqr[j] == 0.0 ? 1.0 : params.iqr[j];
    out[j] = (row[j] - params.median[j]) / scale;
  }
  return out;
}

Matrix transform(const ScalerParams& params, const Matrix& rows) {
  Matrix out(0, rows.cols());
  out.reserve_rows(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out.push_row(transform(params, rows.row(i)));
  return out;
}

}  // namespace flowguard
