#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "prionlab/frag_operator.hpp"
#include "prionlab/grid.hpp"
#include "prionlab/scheme.hpp"

namespace prionlab {

/// State of the coupled monomer/polymer system at one instant.
struct SystemState {
  double t = 0.0;
  double V = 0.0;       // monomer count
  Density u;            // polymer size distribution
  double escaped_m1 = 0.0;  // first moment lost through x_max so far
  // cached moments of u at time t
  double m0 = 0.0, m1 = 0.0, mp = 0.0;

  void refresh_moments(double p) {
    m0 = moment(u, 0.0);
    m1 = moment(u, 1.0);
    mp = moment(u, p);
  }
};

/// Saturated incidence f = tau / (1 + omega m_p); equals tau under mass action
/// (omega = 0) and stays in (0, tau].
inline double incidence(const ModelParams& params, double mp) {
  return params.tau / (1.0 + params.omega * mp);
}

struct TrajectorySample {
  double t, V, m0, m1, mp, x_norm, escaped_m1;
};

/// Recorded run of the coupled system. W and h are the scaling factor and
/// rescaled clock of the self-similar change of variables, advanced with the
/// same Heun stages as the solution itself (one entry per sample).
struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<double> W, h;
  std::vector<std::pair<double, Density>> snapshots;
  bool escaped_flagged = false;

  double final_time() const { return samples.empty() ? 0.0 : samples.back().t; }
};

struct SimulateOptions {
  double horizon = 100.0;
  double output_every = 0.1;
  double snapshot_every = 0.0;  // 0 = no snapshots
  double safety = 0.9;
  double max_dt = 0.05;
  long max_steps = 50000000;
};

/// Per-step callback; g1, g2 are the stage values of f(m_p) V used to advance
/// companion ODEs with the exact same discretization as the system.
class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void on_step(double t_after, double dt, double g1, double g2) = 0;
  virtual void on_sample(const SystemState& state) { (void)state; }
};

/// Explicit Heun integrator for the full nonlinear system
///   dV/dt = lambda - delta V - f(m_p) V m1
///   d_t u = -c tau d_x(x u) - mu u + F u,   c = V / (1 + omega m_p)
/// stepped on the mass variable so the m1 budget
///   dm1/dt = (c tau - mu) m1 - outflow
/// holds exactly at the discrete level.
class PrionSystem {
 public:
  PrionSystem(FragMatrix frag, ModelParams params, int order = 2)
      : frag_(std::move(frag)), params_(validate_params(params)),
        scheme_(frag_.grid_ptr(), order) {}

  const ModelParams& params() const { return params_; }
  const FragMatrix& frag() const { return frag_; }

  /// Disease-free equilibrium state (V = lambda/delta, u = 0).
  SystemState dfe_state() const {
    SystemState s;
    s.V = params_.lambda / params_.delta;
    s.u = Density(frag_.grid_ptr());
    s.refresh_moments(params_.p);
    return s;
  }

  struct Rhs {
    double dV;
    Density du;
    double outflow_m1;
  };

  Rhs rhs(const SystemState& state) const {
    const auto& x = frag_.grid().centers();
    const int n = frag_.grid().size();
    const double f = incidence(params_, state.mp);
    const double sigma = f * state.V;  // = c tau
    std::vector<double> m(n), dm;
    for (int i = 0; i < n; ++i) m[i] = x[i] * state.u.values[i];
    const double out = scheme_.rhs(m, frag_, sigma, sigma - params_.mu, dm);
    Rhs res;
    res.dV = params_.lambda - params_.delta * state.V - f * state.V * state.m1;
    res.du = Density(frag_.grid_ptr());
    for (int i = 0; i < n; ++i) res.du.values[i] = dm[i] / x[i];
    res.outflow_m1 = out;
    return res;
  }

  /// Largest admissible explicit step at this state.
  double max_stable_dt(const SystemState& state, double safety = 1.0) const {
    const double sigma = incidence(params_, state.mp) * state.V;
    const double react = sigma - params_.mu;
    return safety * scheme_.max_stable_dt(frag_, sigma, react);
  }

  /// One Heun step; throws on CFL violation or a negative monomer count.
  SystemState step(const SystemState& state, double dt, double* g1_out = nullptr,
                   double* g2_out = nullptr) const {
    if (dt > max_stable_dt(state) * (1.0 + 1e-12))
      throw NumericalError("CFL violation at t = " + std::to_string(state.t));
    const auto& x = frag_.grid().centers();
    const int n = frag_.grid().size();

    std::vector<double> m(n), k1, k2, ms(n);
    for (int i = 0; i < n; ++i) m[i] = x[i] * state.u.values[i];

    const double f1 = incidence(params_, state.mp);
    const double sigma1 = f1 * state.V;
    const double out1 = scheme_.rhs(m, frag_, sigma1, sigma1 - params_.mu, k1, &workspace_);
    const double dV1 = params_.lambda - params_.delta * state.V - f1 * state.V * state.m1;

    double m1s = 0.0, mps = 0.0;
    const auto& w = frag_.grid().widths();
    for (int i = 0; i < n; ++i) {
      ms[i] = m[i] + dt * k1[i];
      m1s += ms[i] * w[i];
      mps += ms[i] * std::pow(x[i], params_.p - 1.0) * w[i];
    }
    const double Vs = state.V + dt * dV1;
    if (Vs < 0.0)
      throw NumericalError("negative monomer count: dt too large at t = " +
                           std::to_string(state.t));
    const double f2 = incidence(params_, mps);
    const double sigma2 = f2 * Vs;
    const double out2 = scheme_.rhs(ms, frag_, sigma2, sigma2 - params_.mu, k2, &workspace_);
    const double dV2 = params_.lambda - params_.delta * Vs - f2 * Vs * m1s;

    SystemState next;
    next.t = state.t + dt;
    next.V = state.V + 0.5 * dt * (dV1 + dV2);
    next.u = Density(frag_.grid_ptr());
    for (int i = 0; i < n; ++i) next.u.values[i] = (m[i] + 0.5 * dt * (k1[i] + k2[i])) / x[i];
    next.escaped_m1 = state.escaped_m1 + 0.5 * dt * (out1 + out2);
    if (next.V < 0.0)
      throw NumericalError("negative monomer count: dt too large at t = " +
                           std::to_string(state.t));
    next.refresh_moments(params_.p);
    if (g1_out) *g1_out = sigma1;
    if (g2_out) *g2_out = sigma2;
    return next;
  }

  Trajectory simulate(SystemState initial, const SimulateOptions& opts,
                      StepObserver* observer = nullptr) const {
    if (!(opts.horizon > 0.0)) throw ConfigError("horizon must be > 0");
    if (!(opts.output_every > 0.0)) throw ConfigError("output_every must be > 0");

    Trajectory traj;
    SystemState state = std::move(initial);
    state.refresh_moments(params_.p);

    // companion change-of-variables scalars, Heun-advanced with the PDE stages
    double W = 1.0, h = 0.0;
    const double gamma = params_.gamma, mu = params_.mu;

    auto record = [&](const SystemState& s) {
      traj.samples.push_back({s.t, s.V, s.m0, s.m1, s.mp,
                              x_norm(s.u, params_.r), s.escaped_m1});
      traj.W.push_back(W);
      traj.h.push_back(h);
      if (observer) observer->on_sample(s);
    };
    auto snapshot_due = [&](double t) {
      if (opts.snapshot_every <= 0.0) return false;
      const double k = std::round(t / opts.snapshot_every);
      return std::abs(t - k * opts.snapshot_every) < 1e-9 * std::max(1.0, t);
    };

    record(state);
    if (snapshot_due(0.0)) traj.snapshots.emplace_back(0.0, state.u);

    double next_out = std::min(opts.output_every, opts.horizon);
    long steps = 0;
    while (state.t < opts.horizon - 1e-12) {
      double dt = std::min({max_stable_dt(state, opts.safety), opts.max_dt,
                            next_out - state.t});
      if (dt <= 0.0) dt = std::min(max_stable_dt(state, opts.safety), opts.max_dt);
      double g1 = 0.0, g2 = 0.0;
      state = step(state, dt, &g1, &g2);
      // Heun for dW/dt = gamma W (f V - mu W), dh/dt = W, matching stages
      const double dW1 = gamma * W * (g1 - mu * W);
      const double W1 = W + dt * dW1;
      const double dW2 = gamma * W1 * (g2 - mu * W1);
      h += 0.5 * dt * (W + W1);
      W += 0.5 * dt * (dW1 + dW2);
      if (observer) observer->on_step(state.t, dt, g1, g2);

      if (state.t >= next_out - 1e-12) {
        record(state);
        if (snapshot_due(state.t)) traj.snapshots.emplace_back(state.t, state.u);
        next_out = std::min(next_out + opts.output_every, opts.horizon);
        if (next_out <= state.t + 1e-12) next_out = opts.horizon;
      }
      if (++steps > opts.max_steps)
        throw NumericalError("simulate exceeded max_steps = " + std::to_string(opts.max_steps));
      if (state.m1 > 0.0 && state.escaped_m1 > 1e-6 * state.m1) traj.escaped_flagged = true;
    }
    if (traj.samples.back().t < opts.horizon - 1e-12) record(state);
    return traj;
  }

 private:
  FragMatrix frag_;
  ModelParams params_;
  MassScheme scheme_;
  mutable MassScheme::Workspace workspace_;  // per-instance; one system per thread
};

}  // namespace prionlab
