#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include "prionlab/fitting.hpp"
#include "prionlab/params.hpp"
#include "prionlab/prion_system.hpp"

namespace prionlab {

// ---------------------------------------------------------------------------
// Equilibria
// ---------------------------------------------------------------------------

/// Disease-free and endemic equilibria. The EE exists iff R0 > 1 and is
///   V_inf = (mu + lambda omega M_p) / (tau + delta omega M_p),
///   u_inf = Q_inf U with Q_inf = (R0 - 1) / (tau/delta + omega M_p).
struct Equilibria {
  double r0 = 0.0;
  double v_bar = 0.0;   // DFE monomer level lambda/delta
  double theta = 0.0;   // tau v_bar - mu, positive iff R0 > 1
  bool has_ee = false;
  double V_inf = std::numeric_limits<double>::quiet_NaN();
  double Q_inf = std::numeric_limits<double>::quiet_NaN();
};

inline Equilibria equilibria(const ModelParams& params, double Mp) {
  Equilibria eq;
  eq.r0 = r0(params);
  eq.v_bar = params.lambda / params.delta;
  eq.theta = params.tau * eq.v_bar - params.mu;
  if (eq.r0 > 1.0) {
    eq.has_ee = true;
    const double om = params.omega * Mp;
    eq.V_inf = (params.mu + params.lambda * om) / (params.tau + params.delta * om);
    eq.Q_inf = (eq.r0 - 1.0) / (params.tau / params.delta + om);
  }
  return eq;
}

// ---------------------------------------------------------------------------
// Cubic roots and the Routh-Hurwitz criterion
// ---------------------------------------------------------------------------

/// Roots of the monic cubic z^3 + b z^2 + c z + d.
///
/// The depressed form is checked first: an (up to scale) vanishing p and q
/// means a triple root -b/3, which the companion eigensolver could only
/// locate to O(eps^(1/3)); the generic case goes through the companion
/// matrix.
inline std::array<std::complex<double>, 3> cubic_roots(double b, double c, double d) {
  const double p = c - b * b / 3.0;
  const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const double scale = std::max({std::abs(b), std::sqrt(std::abs(c)),
                                 std::cbrt(std::abs(d)), 1e-300});
  if (std::abs(p) <= 1e-12 * scale * scale && std::abs(q) <= 1e-12 * scale * scale * scale) {
    const std::complex<double> z(-b / 3.0, 0.0);
    return {z, z, z};
  }
  Eigen::Matrix3d comp;
  comp << 0, 0, -d,
          1, 0, -c,
          0, 1, -b;
  Eigen::EigenSolver<Eigen::Matrix3d> solver(comp, /*computeEigenvectors=*/false);
  std::array<std::complex<double>, 3> roots;
  for (int i = 0; i < 3; ++i) roots[i] = solver.eigenvalues()[i];
  return roots;
}

/// Routh-Hurwitz verdict for the characteristic polynomial
/// z^3 - T z^2 + M z - D of a 3x3 Jacobian: stable iff T<0, D<0 and MT<D.
struct RouthHurwitz {
  bool pass = false;
  std::array<std::complex<double>, 3> eigenvalues{};
  double max_real = 0.0;
  bool eigen_consistent = true;  // pass agrees with max Re(eig) < 0
};

inline RouthHurwitz routh_hurwitz(double T, double D, double M) {
  RouthHurwitz rh;
  rh.pass = (T < 0.0) && (D < 0.0) && (M * T < D);
  rh.eigenvalues = cubic_roots(-T, M, -D);
  rh.max_real = std::max({rh.eigenvalues[0].real(), rh.eigenvalues[1].real(),
                          rh.eigenvalues[2].real()});
  rh.eigen_consistent = (rh.pass == (rh.max_real < 0.0));
  return rh;
}

// ---------------------------------------------------------------------------
// Jacobian of the homogeneous (V, W, Q) system at the EE
// ---------------------------------------------------------------------------

struct JacobianEE {
  std::array<std::array<double, 3>, 3> J{};
  double T = 0, D = 0, M = 0;  // trace, determinant, principal 2x2 minor sum
};

/// Jacobian about (V_inf, 1, Q_inf) with f(Q) = tau/(1+omega M_p Q); requires
/// R0 > 1.
inline JacobianEE jacobian_ee(const ModelParams& params, double Mp) {
  const Equilibria eq = equilibria(params, Mp);
  if (!eq.has_ee) throw ConfigError("jacobian_ee requires R0 > 1 (no endemic equilibrium)");
  const double V = eq.V_inf, Q = eq.Q_inf;
  const double g = params.gamma, k = params.k(), mu = params.mu, del = params.delta,
               p = params.p;
  const double denom = 1.0 + params.omega * Mp * Q;
  const double f = params.tau / denom;
  const double fp = -params.tau * params.omega * Mp / (denom * denom);

  JacobianEE jac;
  jac.J = {{{-del - Q * f, -k * V * Q * (p * Q * fp + f), -V * (Q * fp + f)},
            {g * f, p * Q * fp * V - g * mu, g * fp * V},
            {0.0, mu * Q, 0.0}}};
  jac.T = -del - g * mu - Q * f + p * V * Q * fp;
  jac.D = g * mu * V * Q * (del * fp - f * f);
  jac.M = g * mu * (del + Q * f - V * Q * fp) - p * del * V * Q * fp + V * Q * f * f;
  return jac;
}

// ---------------------------------------------------------------------------
// Cooperative structure of the (Y, Q, P) system
// ---------------------------------------------------------------------------

/// Sign pattern of the homogeneous (Y, Q, P) Jacobian:
///   [ -  0  sgn(delta-mu) ]
///   [ 0  *  +             ]
///   [ +  sgn(p-1)  *      ]
/// Cooperative (monotone flow) iff every off-diagonal sign is nonnegative,
/// i.e. iff p >= 1 and delta >= mu.
struct CooperativeReport {
  bool cooperative = false;
  std::array<std::array<char, 3>, 3> sign_pattern{};  // '-', '0', '+', '*'
};

inline CooperativeReport cooperative_check(const ModelParams& params) {
  CooperativeReport rep;
  auto sgn_char = [](double v) { return v > 0.0 ? '+' : (v < 0.0 ? '-' : '0'); };
  rep.sign_pattern = {{{'-', '0', sgn_char(params.delta - params.mu)},
                       {'0', '*', '+'},
                       {'+', sgn_char(params.p - 1.0), '*'}}};
  rep.cooperative = (params.p >= 1.0) && (params.delta >= params.mu);
  return rep;
}

// ---------------------------------------------------------------------------
// Full analyzer report
// ---------------------------------------------------------------------------

struct StabilityReport {
  double r0 = 0, v_bar = 0, theta = 0;
  bool has_ee = false;
  double V_inf = std::numeric_limits<double>::quiet_NaN();
  double Q_inf = std::numeric_limits<double>::quiet_NaN();
  JacobianEE jacobian;   // only meaningful when has_ee
  RouthHurwitz rh;       // only meaningful when has_ee
  CooperativeReport cooperative;
};

inline StabilityReport analyze_stability(const ModelParams& params, double Mp) {
  StabilityReport rep;
  const Equilibria eq = equilibria(params, Mp);
  rep.r0 = eq.r0;
  rep.v_bar = eq.v_bar;
  rep.theta = eq.theta;
  rep.has_ee = eq.has_ee;
  rep.cooperative = cooperative_check(params);
  if (eq.has_ee) {
    rep.V_inf = eq.V_inf;
    rep.Q_inf = eq.Q_inf;
    rep.jacobian = jacobian_ee(params, Mp);
    rep.rh = routh_hurwitz(rep.jacobian.T, rep.jacobian.D, rep.jacobian.M);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Trajectory monitors
// ---------------------------------------------------------------------------

/// Lyapunov / persistence / boundedness diagnostics along a recorded run.
struct MonitorReport {
  std::vector<double> t, L;       // L(t) = v_bar P + (V - v_bar)^2 / 2
  double max_L = 0.0;
  double max_forward_diff = 0.0;  // max over steps of L(t_{i+1}) - L(t_i)
  double decay_rate = std::numeric_limits<double>::quiet_NaN();  // tail fit of log L
  // critical-case diagnostics (R0 = 1): t*L should stay bounded, 1/L ~ affine
  double tail_tL_max = std::numeric_limits<double>::quiet_NaN();
  double tail_tL_min = std::numeric_limits<double>::quiet_NaN();
  double inv_L_slope = std::numeric_limits<double>::quiet_NaN();
  // persistence
  bool persistence_applicable = false;
  double persistence_floor = std::numeric_limits<double>::quiet_NaN();
  // boundedness: V + P <= K0 = max(V0 + P0, lambda/min(delta, mu))
  double bound_K0 = 0.0;
  double max_V_plus_P = 0.0;
};

inline MonitorReport lyapunov_monitor(const Trajectory& traj, const ModelParams& params) {
  MonitorReport rep;
  const double v_bar = params.lambda / params.delta;
  const auto& ss = traj.samples;
  const int n = static_cast<int>(ss.size());
  rep.bound_K0 = std::max(ss.front().V + ss.front().m1,
                          params.lambda / std::min(params.delta, params.mu));
  for (int i = 0; i < n; ++i) {
    const double dV = ss[i].V - v_bar;
    rep.t.push_back(ss[i].t);
    rep.L.push_back(v_bar * ss[i].m1 + 0.5 * dV * dV);
    rep.max_L = std::max(rep.max_L, rep.L.back());
    rep.max_V_plus_P = std::max(rep.max_V_plus_P, ss[i].V + ss[i].m1);
    if (i > 0) rep.max_forward_diff = std::max(rep.max_forward_diff, rep.L[i] - rep.L[i - 1]);
  }

  // tail exponential rate (meaningful for R0 < 1)
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    if (ss[i].t >= 0.5 * ss.back().t && rep.L[i] > 1e-300) {
      xs.push_back(ss[i].t);
      ys.push_back(std::log(rep.L[i]));
    }
  }
  if (xs.size() >= 5) rep.decay_rate = -fit_line(xs, ys).slope;

  // critical-case tail: t*L window statistics and the slope of 1/L
  std::vector<double> ts, invL;
  for (int i = 0; i < n; ++i) {
    if (ss[i].t >= (2.0 / 3.0) * ss.back().t && rep.L[i] > 0.0) {
      const double tl = ss[i].t * rep.L[i];
      if (std::isnan(rep.tail_tL_max) || tl > rep.tail_tL_max) rep.tail_tL_max = tl;
      if (std::isnan(rep.tail_tL_min) || tl < rep.tail_tL_min) rep.tail_tL_min = tl;
      ts.push_back(ss[i].t);
      invL.push_back(1.0 / rep.L[i]);
    }
  }
  if (ts.size() >= 5) rep.inv_L_slope = fit_line(ts, invL).slope;
  return rep;
}

/// Floor of the polymer mass P = m1 over the final window of the run. The
/// liminf of the persistence statement is proxied by that minimum.
inline MonitorReport persistence_monitor(const Trajectory& traj, const ModelParams& params,
                                         double window_fraction = 1.0 / 3.0) {
  MonitorReport rep = lyapunov_monitor(traj, params);
  const auto& ss = traj.samples;
  rep.persistence_applicable = ss.front().m1 > 0.0 && r0(params) > 1.0;
  if (!rep.persistence_applicable) return rep;
  const double t_from = ss.back().t * (1.0 - window_fraction);
  double floor = std::numeric_limits<double>::infinity();
  for (const auto& s : ss)
    if (s.t >= t_from) floor = std::min(floor, s.m1);
  rep.persistence_floor = floor;
  return rep;
}

}  // namespace prionlab
