#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "prionlab/params.hpp"

namespace prionlab {

/// Finite-volume discretization of the size axis (0, x_max].
///
/// Cells are [e_i, e_{i+1}), centers x_i = (e_i + e_{i+1})/2, widths
/// w_i = e_{i+1} - e_i. The geometric layout keeps w_{i+1}/w_i constant and
/// needs x_min > 0; the uniform layout admits x_min = 0.
class SizeGrid {
 public:
  enum class Layout { Uniform, Geometric };

  static std::shared_ptr<const SizeGrid> uniform(int n_cells, double x_min, double x_max) {
    check(n_cells, x_min, x_max, /*need_positive_min=*/false);
    std::vector<double> e(n_cells + 1);
    for (int i = 0; i <= n_cells; ++i)
      e[i] = x_min + (x_max - x_min) * static_cast<double>(i) / n_cells;
    e.front() = x_min;
    e.back() = x_max;
    return std::shared_ptr<const SizeGrid>(new SizeGrid(std::move(e), Layout::Uniform));
  }

  static std::shared_ptr<const SizeGrid> geometric(int n_cells, double x_min, double x_max) {
    check(n_cells, x_min, x_max, /*need_positive_min=*/true);
    std::vector<double> e(n_cells + 1);
    const double l0 = std::log(x_min), l1 = std::log(x_max);
    for (int i = 0; i <= n_cells; ++i)
      e[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / n_cells);
    e.front() = x_min;
    e.back() = x_max;
    return std::shared_ptr<const SizeGrid>(new SizeGrid(std::move(e), Layout::Geometric));
  }

  int size() const { return static_cast<int>(centers_.size()); }
  Layout layout() const { return layout_; }
  const std::vector<double>& edges() const { return edges_; }
  const std::vector<double>& centers() const { return centers_; }
  const std::vector<double>& widths() const { return widths_; }
  double x_min() const { return edges_.front(); }
  double x_max() const { return edges_.back(); }

 private:
  SizeGrid(std::vector<double> edges, Layout layout)
      : edges_(std::move(edges)), layout_(layout) {
    const int n = static_cast<int>(edges_.size()) - 1;
    centers_.resize(n);
    widths_.resize(n);
    for (int i = 0; i < n; ++i) {
      centers_[i] = 0.5 * (edges_[i] + edges_[i + 1]);
      widths_[i] = edges_[i + 1] - edges_[i];
    }
  }

  static void check(int n_cells, double x_min, double x_max, bool need_positive_min) {
    if (n_cells < 1) throw ConfigError("grid needs at least one cell");
    if (!(x_max > x_min)) throw ConfigError("grid requires x_max > x_min");
    if (!(x_min >= 0.0)) throw ConfigError("grid requires x_min >= 0");
    if (need_positive_min && !(x_min > 0.0))
      throw ConfigError("geometric grid requires x_min > 0");
  }

  std::vector<double> edges_;
  std::vector<double> centers_;
  std::vector<double> widths_;
  Layout layout_;
};

/// 400 geometric cells on [1e-4, 50*(mu/beta)^(1/gamma)]; the upper bound is
/// 50 characteristic sizes, where the steady profile has long since decayed.
inline std::shared_ptr<const SizeGrid> default_grid(const ModelParams& p, int n_cells = 400,
                                                    double x_min = 1e-4) {
  const double xc = std::pow(p.mu / p.beta, 1.0 / p.gamma);
  return SizeGrid::geometric(n_cells, x_min, 50.0 * xc);
}

/// Cell-averaged polymer size distribution on a shared grid.
struct Density {
  std::shared_ptr<const SizeGrid> grid;
  std::vector<double> values;

  Density() = default;
  explicit Density(std::shared_ptr<const SizeGrid> g)
      : grid(std::move(g)), values(grid->size(), 0.0) {}
  Density(std::shared_ptr<const SizeGrid> g, std::vector<double> v)
      : grid(std::move(g)), values(std::move(v)) {}

  int size() const { return static_cast<int>(values.size()); }
};

/// Density sampled from a scalar function of x (value at cell centers).
template <typename F>
Density density_from(const std::shared_ptr<const SizeGrid>& grid, F&& f) {
  Density u(grid);
  for (int i = 0; i < grid->size(); ++i) u.values[i] = f(grid->centers()[i]);
  return u;
}

/// Midpoint-rule moment \int x^alpha u dx = sum_i u_i x_i^alpha w_i.
/// Exact for piecewise-constant u when alpha = 0 or 1.
inline double moment(const Density& u, double alpha) {
  const auto& x = u.grid->centers();
  const auto& w = u.grid->widths();
  double acc = 0.0;
  if (alpha == 0.0) {
    for (int i = 0; i < u.size(); ++i) acc += u.values[i] * w[i];
  } else if (alpha == 1.0) {
    for (int i = 0; i < u.size(); ++i) acc += u.values[i] * x[i] * w[i];
  } else {
    for (int i = 0; i < u.size(); ++i) acc += u.values[i] * std::pow(x[i], alpha) * w[i];
  }
  return acc;
}

/// Working-space norm ||u|| = \int |u| dx + \int |u| x^r dx.
inline double x_norm(const Density& u, double r) {
  const auto& x = u.grid->centers();
  const auto& w = u.grid->widths();
  double acc = 0.0;
  for (int i = 0; i < u.size(); ++i)
    acc += std::abs(u.values[i]) * (1.0 + std::pow(x[i], r)) * w[i];
  return acc;
}

/// Spatial dilation v(x) = s * u(s x), resampled conservatively onto the same
/// grid: v_i = (1/w_i) \int_{s e_i}^{s e_{i+1}} u. Number moment(.,0) is
/// preserved up to the mass pushed outside the grid support.
inline Density rescale_density(const Density& u, double scale) {
  if (!(scale > 0.0)) throw ConfigError("dilation factor must be > 0");
  const auto& e = u.grid->edges();
  const int n = u.size();
  Density v(u.grid);
  if (scale == 1.0) {
    v.values = u.values;
    return v;
  }
  // Sweep source cells once; both edge sequences are increasing.
  int j = 0;  // source cell candidate
  for (int i = 0; i < n; ++i) {
    const double lo = scale * e[i], hi = scale * e[i + 1];
    while (j < n && e[j + 1] <= lo) ++j;
    double acc = 0.0;
    for (int jj = j; jj < n && e[jj] < hi; ++jj) {
      const double a = std::max(lo, e[jj]);
      const double b = std::min(hi, e[jj + 1]);
      if (b > a) acc += u.values[jj] * (b - a);
    }
    v.values[i] = acc / (e[i + 1] - e[i]);
  }
  return v;
}

}  // namespace prionlab
