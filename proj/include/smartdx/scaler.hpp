#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "smartdx/error.hpp"
#include "smartdx/features.hpp"

namespace smartdx {

/// Per-column z-score statistics. Columns with zero spread are flagged and
/// only centered when applied.
struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<bool> degenerate;

  double transform(std::size_t col, double x) const {
    return degenerate[col] ? x - mean[col] : (x - mean[col]) / sd[col];
  }
};

/// Population mean and sd of each column over `rows` only.
inline ScalerParams fit_scaler(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  if (rows.empty()) throw NumericError("fit_scaler: empty row subset");
  const std::size_t nc = m.cols();
  ScalerParams p;
  p.mean.assign(nc, 0.0);
  p.sd.assign(nc, 0.0);
  p.degenerate.assign(nc, false);
  const double n = static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    const auto x = m.row(r);
    for (std::size_t c = 0; c < nc; ++c) p.mean[c] += x[c];
  }
  for (double& v : p.mean) v /= n;
  for (std::size_t r : rows) {
    const auto x = m.row(r);
    for (std::size_t c = 0; c < nc; ++c) {
      const double d = x[c] - p.mean[c];
      p.sd[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    p.sd[c] = std::sqrt(p.sd[c] / n);
    p.degenerate[c] = !(p.sd[c] > 0.0);
  }
  return p;
}

inline std::vector<double> apply_scaler(const ScalerParams& p, std::span<const double> row) {
  if (row.size() != p.mean.size()) throw NumericError("apply_scaler: column count mismatch");
  std::vector<double> out(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) out[c] = p.transform(c, row[c]);
  return out;
}

/// Transforms the given rows of `m`, returning a matrix of those rows only.
inline FeatureMatrix apply_scaler(const ScalerParams& p, const FeatureMatrix& m,
                                  std::span<const std::size_t> rows) {
  FeatureMatrix out = m.select_rows(rows);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) = p.transform(c, out.at(r, c));
  return out;
}

}  // namespace smartdx
