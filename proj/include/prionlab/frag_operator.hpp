#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "prionlab/grid.hpp"
#include "prionlab/params.hpp"

namespace prionlab {

/// Discrete fragmentation operator
///   F u(x) = 2 \int_x^inf beta(y) kappa(x,y) u(y) dy - beta(x) u(x)
/// assembled so the discrete first moment of F u vanishes exactly:
/// sum_i x_i w_i G_ij = x_j L_j for every source column j.
class FragMatrix {
 public:
  const SizeGrid& grid() const { return *grid_; }
  std::shared_ptr<const SizeGrid> grid_ptr() const { return grid_; }
  double beta() const { return beta_; }
  double gamma() const { return gamma_; }

  /// Gain entry G_ij (density gained at cell i per unit w_j u_j), 0 for x_i > y_j.
  double gain(int i, int j) const { return gain_[static_cast<size_t>(i) * n_ + j]; }
  /// Loss rate L_i = beta x_i^gamma.
  double loss(int i) const { return loss_[i]; }
  const std::vector<double>& loss() const { return loss_; }
  double max_loss() const { return loss_.back(); }

  /// (F u)_i = sum_j G_ij w_j u_j - L_i u_i; plain-array form for steppers.
  /// Scratch space may be passed in to avoid reallocation in hot loops.
  void apply_values(const double* u, double* fu, std::vector<double>* scratch = nullptr) const {
    const auto& w = grid_->widths();
    std::vector<double> local;
    std::vector<double>& wu = scratch ? *scratch : local;
    wu.resize(n_);
    for (int j = 0; j < n_; ++j) wu[j] = w[j] * u[j];
    for (int i = 0; i < n_; ++i) {
      const double* row = gain_.data() + static_cast<size_t>(i) * n_;
      double acc = 0.0;
      for (int j = i; j < n_; ++j) acc += row[j] * wu[j];
      fu[i] = acc - loss_[i] * u[i];
    }
  }

  Density apply(const Density& u) const {
    Density rate(grid_);
    apply_values(u.values.data(), rate.values.data());
    return rate;
  }

  friend FragMatrix assemble(std::shared_ptr<const SizeGrid> grid, const ModelParams& params,
                             const FragKernel& kernel);

 private:
  FragMatrix(std::shared_ptr<const SizeGrid> g, double beta, double gamma)
      : grid_(std::move(g)), n_(grid_->size()), beta_(beta), gamma_(gamma),
        gain_(static_cast<size_t>(n_) * n_, 0.0), loss_(n_, 0.0) {}

  std::shared_ptr<const SizeGrid> grid_;
  int n_;
  double beta_, gamma_;
  std::vector<double> gain_;  // row-major, upper-triangular (j >= i)
  std::vector<double> loss_;
};

namespace detail {

// \int_{z0}^{z1} wp(z) dz by composite Simpson; exact for the uniform kernel.
inline double kernel_segment_integral(const FragKernel& wp, double z0, double z1) {
  if (wp.family() == FragKernel::Family::Uniform) return z1 - z0;
  constexpr int kSub = 8;
  const double hstep = (z1 - z0) / kSub;
  double acc = wp(z0) + wp(z1);
  for (int i = 1; i < kSub; ++i) acc += wp(z0 + i * hstep) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * hstep / 3.0;
}

}  // namespace detail

/// Assembles the gain matrix with cell-averaged kernel weights
///   G_ij = 2 beta y_j^{gamma-1} / w_i * \int over cell_i cap [0, y_j] of wp(xi/y_j) dxi
/// for x_i <= y_j, then rescales each column to satisfy the exact mass balance
/// sum_i x_i w_i G_ij = x_j L_j. A column whose only in-range row is its own
/// diagonal may integrate to zero (symmetric kernels vanish at z = 1); such a
/// column degrades to self-deposit, which keeps the balance and is the only
/// consistent choice when every fragment is below grid resolution.
inline FragMatrix assemble(std::shared_ptr<const SizeGrid> grid, const ModelParams& params,
                           const FragKernel& kernel) {
  validate_params(params);
  FragMatrix fm(grid, params.beta, params.gamma);
  const int n = grid->size();
  const auto& e = grid->edges();
  const auto& x = grid->centers();
  const auto& w = grid->widths();

  for (int i = 0; i < n; ++i) fm.loss_[i] = params.beta * std::pow(x[i], params.gamma);

  for (int j = 0; j < n; ++j) {
    const double y = x[j];
    const double front = 2.0 * params.beta * std::pow(y, params.gamma - 1.0);
    for (int i = 0; i <= j; ++i) {
      const double lo = e[i];
      const double hi = std::min(e[i + 1], y);
      if (hi <= lo) continue;
      const double seg = detail::kernel_segment_integral(kernel, lo / y, hi / y);
      fm.gain_[static_cast<size_t>(i) * n + j] = front * (y / w[i]) * std::max(seg, 0.0);
    }
    double colsum = 0.0;
    for (int i = 0; i <= j; ++i) colsum += x[i] * w[i] * fm.gain_[static_cast<size_t>(i) * n + j];
    const double target = x[j] * fm.loss_[j];
    if (colsum > 0.0) {
      const double scale = target / colsum;
      for (int i = 0; i <= j; ++i) fm.gain_[static_cast<size_t>(i) * n + j] *= scale;
    } else if (j == 0) {
      fm.gain_[0] = fm.loss_[0] / w[0];  // self-deposit
    } else {
      throw NumericalError("fragmentation kernel vanishes identically on column " +
                           std::to_string(j));
    }
  }
  return fm;
}

}  // namespace prionlab
