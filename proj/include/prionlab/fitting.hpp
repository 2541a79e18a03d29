#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace prionlab {

/// Ordinary least-squares line y = intercept + slope * x, with the rms
/// residual and the spanned y-range (used to normalize fit quality).
struct LineFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double rms_residual = std::numeric_limits<double>::quiet_NaN();
  double y_range = std::numeric_limits<double>::quiet_NaN();
  int n = 0;

  bool valid() const { return n >= 2 && std::isfinite(slope); }
  /// rms residual relative to the spanned range; NaN when the fit is flat.
  double relative_residual() const { return y_range > 0.0 ? rms_residual / y_range : 0.0; }
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  LineFit out;
  out.n = static_cast<int>(std::min(xs.size(), ys.size()));
  if (out.n < 2) return out;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double ymin = ys[0], ymax = ys[0];
  for (int i = 0; i < out.n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    ymin = std::min(ymin, ys[i]);
    ymax = std::max(ymax, ys[i]);
  }
  const double det = out.n * sxx - sx * sx;
  if (det == 0.0) return out;
  out.slope = (out.n * sxy - sx * sy) / det;
  out.intercept = (sy - out.slope * sx) / out.n;
  double ss = 0.0;
  for (int i = 0; i < out.n; ++i) {
    const double r = ys[i] - (out.intercept + out.slope * xs[i]);
    ss += r * r;
  }
  out.rms_residual = std::sqrt(ss / out.n);
  out.y_range = ymax - ymin;
  return out;
}

}  // namespace prionlab
