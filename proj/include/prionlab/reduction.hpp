#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "prionlab/fitting.hpp"
#include "prionlab/grid.hpp"
#include "prionlab/linear_gf.hpp"
#include "prionlab/prion_system.hpp"

namespace prionlab {

/// Normalized moment deviations eps_alpha = m_alpha / (M_alpha Q W^{k alpha}) - 1
/// for alpha in {0, p, 1, r}, sampled along a run.
struct EpsSeries {
  std::vector<double> t, h;
  std::vector<double> eps0, eps1, epsp, epsr;
};

/// Self-similar change of variables evaluated along a recorded trajectory.
///
/// W and h come from the per-step companion integration inside simulate();
/// Q is taken from the exact discrete mass identity Q = m1 / W^k (the same
/// identity that makes eps_1 vanish), and the definition Q_h = rho0 e^{mu(h-t)}
/// is reported alongside as a consistency diagnostic (they differ by the time
/// integrator's O(dt^2)).
struct TransformResult {
  std::vector<double> t, W, h, Q, P, Y, Q_from_h;
  EpsSeries eps;
  std::vector<std::pair<double, Density>> v_snapshots;  // keyed by rescaled time h(t)
  double rho0 = 0.0;

  // diagnostics
  double max_abs_eps1 = 0.0;
  double rate_eps0 = std::numeric_limits<double>::quiet_NaN();
  double rate_epsp = std::numeric_limits<double>::quiet_NaN();
  double rate_epsr = std::numeric_limits<double>::quiet_NaN();
  double min_w_lower_bound = std::numeric_limits<double>::quiet_NaN();  // min W(t)(1+gamma mu t)
  double max_q_dev = 0.0;  // max |Q - Q_from_h| / Q
};

namespace detail {

// Decay rate of |series| against the abscissa: least-squares slope of
// log|eps| from its peak until the series first drops below a floor tied to
// the peak. A series already at rounding floor counts as fully decayed.
inline double decay_rate(const std::vector<double>& abscissa, const std::vector<double>& series) {
  const int n = static_cast<int>(series.size());
  double peak = 0.0;
  int ipeak = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(series[i]) > peak) {
      peak = std::abs(series[i]);
      ipeak = i;
    }
  }
  if (peak <= 1e-12) return std::numeric_limits<double>::infinity();
  const double thr = std::max(1e-13, peak * 1e-8);
  std::vector<double> xs, ys;
  for (int i = ipeak; i < n; ++i) {
    if (std::abs(series[i]) < thr) break;
    xs.push_back(abscissa[i]);
    ys.push_back(std::log(std::abs(series[i])));
  }
  if (xs.size() < 10) return std::numeric_limits<double>::quiet_NaN();
  return -fit_line(xs, ys).slope;
}

}  // namespace detail

/// Builds (W, h, Q, P, Y), the eps series, and the rescaled snapshots
/// v(h, x) = W^k u(t, W^k x) e^{mu(t-h)} from a recorded trajectory.
inline TransformResult transform_from_pde(const Trajectory& traj, const ModelParams& params,
                                          const Profile& profile) {
  if (traj.samples.empty() || traj.W.size() != traj.samples.size())
    throw ConfigError("trajectory lacks the per-step transform columns (W, h)");
  const double rho0 = traj.samples.front().m1;
  if (!(rho0 > 0.0))
    throw NumericalError("transform is degenerate: initial polymer mass is zero");

  const double k = params.k();
  TransformResult out;
  out.rho0 = rho0;
  const int n = static_cast<int>(traj.samples.size());
  out.min_w_lower_bound = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const auto& s = traj.samples[i];
    const double W = traj.W[i], h = traj.h[i];
    const double Wk = std::pow(W, k);
    const double Q = s.m1 / Wk;
    const double P = Wk * Q;
    const double Qh = rho0 * std::exp(params.mu * (h - s.t));
    out.t.push_back(s.t);
    out.W.push_back(W);
    out.h.push_back(h);
    out.Q.push_back(Q);
    out.P.push_back(P);
    out.Y.push_back(s.V + P);
    out.Q_from_h.push_back(Qh);
    out.max_q_dev = std::max(out.max_q_dev, std::abs(Q - Qh) / Q);
    out.min_w_lower_bound = std::min(out.min_w_lower_bound,
                                     W * (1.0 + params.gamma * params.mu * s.t));

    const double mr = s.x_norm - s.m0;
    out.eps.t.push_back(s.t);
    out.eps.h.push_back(h);
    out.eps.eps0.push_back(s.m0 / (profile.M0 * Q) - 1.0);
    out.eps.eps1.push_back(s.m1 / (profile.M1 * Q * Wk) - 1.0);
    out.eps.epsp.push_back(s.mp / (profile.Mp * Q * std::pow(W, k * params.p)) - 1.0);
    out.eps.epsr.push_back(mr / (profile.Mr * Q * std::pow(W, k * params.r)) - 1.0);
    out.max_abs_eps1 = std::max(out.max_abs_eps1, std::abs(out.eps.eps1.back()));
  }

  out.rate_eps0 = detail::decay_rate(out.eps.h, out.eps.eps0);
  out.rate_epsp = detail::decay_rate(out.eps.h, out.eps.epsp);
  out.rate_epsr = detail::decay_rate(out.eps.h, out.eps.epsr);

  for (const auto& [ts, u] : traj.snapshots) {
    // locate the matching sample for (W, h)
    int idx = -1;
    for (int i = 0; i < n; ++i) {
      if (std::abs(traj.samples[i].t - ts) < 1e-9 * std::max(1.0, ts)) {
        idx = i;
        break;
      }
    }
    if (idx < 0) continue;
    const double W = traj.W[idx], h = traj.h[idx];
    const double Wk = std::pow(W, k);
    Density v = rescale_density(u, Wk);
    const double amp = std::exp(params.mu * (ts - h));
    for (auto& val : v.values) val *= amp;
    out.v_snapshots.emplace_back(h, std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reduced ODE systems
// ---------------------------------------------------------------------------

enum class Formulation { VWQ, VWP, YQP };

/// Point of one of the three reduced systems; s holds the scalars in the
/// formulation's natural order ((V,W,Q), (V,W,P) or (Y,Q,P)).
struct ReducedState {
  Formulation formulation = Formulation::VWQ;
  std::array<double, 3> s{0.0, 0.0, 0.0};
};

/// All five derived scalars of a reduced-state point.
struct ReducedPoint {
  double V, W, Q, P, Y;
};

inline ReducedPoint expand(const ReducedState& st, const ModelParams& params) {
  const double k = params.k();
  ReducedPoint p{};
  switch (st.formulation) {
    case Formulation::VWQ:
      p.V = st.s[0]; p.W = st.s[1]; p.Q = st.s[2];
      p.P = std::pow(p.W, k) * p.Q;
      p.Y = p.V + p.P;
      break;
    case Formulation::VWP:
      p.V = st.s[0]; p.W = st.s[1]; p.P = st.s[2];
      p.Q = p.P / std::pow(p.W, k);
      p.Y = p.V + p.P;
      break;
    case Formulation::YQP:
      p.Y = st.s[0]; p.Q = st.s[1]; p.P = st.s[2];
      p.W = std::pow(p.P / p.Q, params.gamma);
      p.V = p.Y - p.P;
      break;
  }
  return p;
}

/// f(eps; I) = tau / (1 + omega M_p (1 + eps) I): the incidence of the reduced
/// systems, with the moment deviation eps folded into its argument.
inline double reduced_incidence(const ModelParams& params, double Mp, double eps, double I) {
  return params.tau / (1.0 + params.omega * Mp * (1.0 + eps) * I);
}

/// Right-hand side of the selected reduced system.
inline std::array<double, 3> reduced_rhs(const ReducedState& st, const ModelParams& params,
                                         double Mp, double eps_p) {
  const double k = params.k(), g = params.gamma;
  const double lam = params.lambda, del = params.delta, mu = params.mu;
  switch (st.formulation) {
    case Formulation::VWQ: {
      const double V = st.s[0], W = st.s[1], Q = st.s[2];
      const double fe = reduced_incidence(params, Mp, eps_p, std::pow(W, k * params.p) * Q);
      return {lam - V * (del + fe * std::pow(W, k) * Q),
              g * W * (fe * V - mu * W),
              mu * Q * (W - 1.0)};
    }
    case Formulation::VWP: {
      const double V = st.s[0], W = st.s[1], P = st.s[2];
      const double fe =
          reduced_incidence(params, Mp, eps_p, std::pow(W, k * (params.p - 1.0)) * P);
      return {lam - V * (del + fe * P),
              g * W * (fe * V - mu * W),
              P * (fe * V - mu)};
    }
    case Formulation::YQP: {
      const double Y = st.s[0], Q = st.s[1], P = st.s[2];
      const double fe = reduced_incidence(params, Mp, eps_p,
                                          std::pow(P, params.p) * std::pow(Q, 1.0 - params.p));
      return {lam - del * Y + (del - mu) * P,
              mu * Q * (std::pow(P / Q, g) - 1.0),
              P * (fe * (Y - P) - mu)};
    }
  }
  return {0.0, 0.0, 0.0};
}

/// Driving term eps_p(t) for the reduced systems.
struct EpsZero {};
struct EpsSeriesData {
  std::vector<double> t, value;  // piecewise-linear in t
  double operator()(double ti) const {
    if (t.empty()) return 0.0;
    if (ti <= t.front()) return value.front();
    if (ti >= t.back()) return value.back();
    const auto it = std::upper_bound(t.begin(), t.end(), ti);
    const size_t i = static_cast<size_t>(it - t.begin());
    const double s = (ti - t[i - 1]) / (t[i] - t[i - 1]);
    return value[i - 1] + s * (value[i] - value[i - 1]);
  }
};
struct EpsSyntheticDecay {
  double eps0 = 0.0;
  double rate = 1.0;  // eps(t) = eps0 * exp(-rate * h(t))
};
using EpsSource = std::variant<EpsZero, EpsSeriesData, EpsSyntheticDecay>;

inline double eval_eps(const EpsSource& src, double t, double h) {
  if (std::holds_alternative<EpsZero>(src)) return 0.0;
  if (const auto* s = std::get_if<EpsSeriesData>(&src)) return (*s)(t);
  const auto& d = std::get<EpsSyntheticDecay>(src);
  return d.eps0 * std::exp(-d.rate * h);
}

struct ReducedTrajectory {
  Formulation formulation = Formulation::VWQ;
  std::vector<double> t, V, W, Q, P, Y, h;
};

/// Classical fixed-step RK4 on the selected reduced system, with the rescaled
/// clock h integrated alongside (dh/dt = W). Outputs exactly at output_times.
inline ReducedTrajectory integrate_reduced(const ReducedState& initial, const ModelParams& params,
                                           double Mp, const std::vector<double>& output_times,
                                           const EpsSource& eps = EpsZero{},
                                           double dt_target = 0.01) {
  if (output_times.size() < 2) throw ConfigError("integrate_reduced needs >= 2 output times");
  ReducedTrajectory out;
  out.formulation = initial.formulation;
  ReducedState st = initial;
  double h = 0.0;

  auto push = [&](double t) {
    const ReducedPoint pt = expand(st, params);
    for (double v : {pt.V, pt.W, pt.Q, pt.P, pt.Y})
      if (!std::isfinite(v) || std::abs(v) > 1e12)
        throw NumericalError("reduced system blow-up at t = " + std::to_string(t));
    out.t.push_back(t);
    out.V.push_back(pt.V);
    out.W.push_back(pt.W);
    out.Q.push_back(pt.Q);
    out.P.push_back(pt.P);
    out.Y.push_back(pt.Y);
    out.h.push_back(h);
  };

  auto rhs4 = [&](const std::array<double, 4>& y, double t) {
    ReducedState tmp{st.formulation, {y[0], y[1], y[2]}};
    const auto r = reduced_rhs(tmp, params, Mp, eval_eps(eps, t, y[3]));
    const double W = expand(tmp, params).W;
    return std::array<double, 4>{r[0], r[1], r[2], W};
  };

  push(output_times.front());
  for (size_t seg = 1; seg < output_times.size(); ++seg) {
    const double t0 = output_times[seg - 1], t1 = output_times[seg];
    const int nsub = std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt_target)));
    const double dt = (t1 - t0) / nsub;
    std::array<double, 4> y{st.s[0], st.s[1], st.s[2], h};
    double t = t0;
    for (int i = 0; i < nsub; ++i) {
      const auto k1 = rhs4(y, t);
      std::array<double, 4> y2, y3, y4;
      for (int j = 0; j < 4; ++j) y2[j] = y[j] + 0.5 * dt * k1[j];
      const auto k2 = rhs4(y2, t + 0.5 * dt);
      for (int j = 0; j < 4; ++j) y3[j] = y[j] + 0.5 * dt * k2[j];
      const auto k3 = rhs4(y3, t + 0.5 * dt);
      for (int j = 0; j < 4; ++j) y4[j] = y[j] + dt * k3[j];
      const auto k4 = rhs4(y4, t + dt);
      for (int j = 0; j < 4; ++j) y[j] += dt / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
      t += dt;
    }
    st.s = {y[0], y[1], y[2]};
    h = y[3];
    push(t1);
  }
  return out;
}

/// Sup-norm deviations between the transform extracted from a run and an
/// integrated reduced trajectory on the same time grid.
struct ConsistencyReport {
  double sup_dV = 0, sup_dW = 0, sup_dQ = 0, sup_dP = 0;
  double max() const { return std::max({sup_dV, sup_dW, sup_dQ, sup_dP}); }
};

inline ConsistencyReport consistency_check(const TransformResult& pde,
                                           const ReducedTrajectory& ode) {
  if (pde.t.size() != ode.t.size())
    throw ConfigError("consistency_check requires matching time grids");
  ConsistencyReport rep;
  for (size_t i = 0; i < pde.t.size(); ++i) {
    if (std::abs(pde.t[i] - ode.t[i]) > 1e-9 * std::max(1.0, pde.t[i]))
      throw ConfigError("consistency_check requires matching time grids");
    rep.sup_dV = std::max(rep.sup_dV, std::abs((pde.Y[i] - pde.P[i]) - ode.V[i]));
    rep.sup_dW = std::max(rep.sup_dW, std::abs(pde.W[i] - ode.W[i]));
    rep.sup_dQ = std::max(rep.sup_dQ, std::abs(pde.Q[i] - ode.Q[i]));
    rep.sup_dP = std::max(rep.sup_dP, std::abs(pde.P[i] - ode.P[i]));
  }
  return rep;
}

}  // namespace prionlab
