#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prionlab/io.hpp"
#include "prionlab/linear_gf.hpp"
#include "prionlab/prion_system.hpp"
#include "prionlab/reduction.hpp"
#include "prionlab/stability.hpp"

namespace prionlab {

struct CriterionResult {
  int index = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

inline json criterion_to_json(const CriterionResult& c) {
  return json{{"index", c.index}, {"name", c.name},       {"pass", c.pass},
              {"detail", c.detail}, {"seconds", c.seconds}};
}

namespace verify_detail {

inline double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

inline std::string fmt(double v) { return format_double(v); }

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(std::log(lo), std::log(hi));
  return std::exp(dist(rng));
}

}  // namespace verify_detail

/// Canonical setup shared by the verification scenarios, with lazily built
/// heavyweight pieces (profile, endemic-regime run) reused across criteria.
class VerifyContext {
 public:
  explicit VerifyContext(uint64_t seed = 1234) : seed_(seed) {
    canonical_.lambda = 2.0;
    canonical_.delta = canonical_.tau = canonical_.mu = canonical_.beta = canonical_.gamma = 1.0;
    canonical_.omega = 0.0;
    canonical_.p = 1.0;
    canonical_.r = 2.0;
    grid_ = SizeGrid::geometric(400, 1e-4, 50.0);
    kernel_ = std::make_unique<FragKernel>(FragKernel::uniform());
  }

  uint64_t seed() const { return seed_; }
  const ModelParams& canonical() const { return canonical_; }
  const std::shared_ptr<const SizeGrid>& grid() const { return grid_; }
  const FragKernel& kernel() const { return *kernel_; }

  std::mt19937_64 rng(uint64_t stream) const { return std::mt19937_64(seed_ * 0x9e3779b9ull + stream); }

  const FragMatrix& frag() {
    if (!frag_) frag_ = std::make_unique<FragMatrix>(assemble(grid_, canonical_, *kernel_));
    return *frag_;
  }

  const Profile& profile() {
    if (!profile_) {
      profile_ = std::make_unique<Profile>(compute_profile(grid_, canonical_, *kernel_, 1e-12));
    }
    return *profile_;
  }

  /// Endemic-regime run: R0 = 2, mass action, V0 = 2, u0 = 0.1 e^{-x}, t = 100.
  const Trajectory& ee_trajectory() {
    if (!ee_traj_) {
      PrionSystem sys(frag(), canonical_);
      SystemState init;
      init.V = 2.0;
      init.u = density_from(grid_, [](double x) { return 0.1 * std::exp(-x); });
      SimulateOptions opts;
      opts.horizon = 100.0;
      opts.output_every = 0.1;
      opts.snapshot_every = 10.0;
      const double t0 = verify_detail::now_seconds();
      ee_traj_ = std::make_unique<Trajectory>(sys.simulate(std::move(init), opts));
      ee_run_seconds_ = verify_detail::now_seconds() - t0;
    }
    return *ee_traj_;
  }
  double ee_run_seconds() { ee_trajectory(); return ee_run_seconds_; }

  const TransformResult& ee_transform() {
    if (!ee_transform_) {
      ee_transform_ = std::make_unique<TransformResult>(
          transform_from_pde(ee_trajectory(), canonical_, profile()));
    }
    return *ee_transform_;
  }

 private:
  uint64_t seed_;
  ModelParams canonical_;
  std::shared_ptr<const SizeGrid> grid_;
  std::unique_ptr<FragKernel> kernel_;
  std::unique_ptr<FragMatrix> frag_;
  std::unique_ptr<Profile> profile_;
  std::unique_ptr<Trajectory> ee_traj_;
  std::unique_ptr<TransformResult> ee_transform_;
  double ee_run_seconds_ = 0.0;
};

namespace verify_detail {

using verify_detail::fmt;

inline CriterionResult crit_conservation(VerifyContext& ctx) {
  const double t0 = now_seconds();
  auto rng = ctx.rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const FragMatrix& F = ctx.frag();
  const auto& grid = *ctx.grid();
  double worst = 0.0;
  Density u(ctx.grid());
  for (int trial = 0; trial < 1000; ++trial) {
    for (int i = 0; i < grid.size(); ++i) u.values[i] = unif(rng);
    Density fu = F.apply(u);
    const double lhs = std::abs(moment(fu, 1.0));
    const double scale = F.beta() * moment(u, 1.0 + F.gamma());
    worst = std::max(worst, lhs / scale);
  }
  const double secs = now_seconds() - t0;
  CriterionResult c{1, "fragmentation first-moment conservation", false, "", secs};
  c.pass = worst <= 1e-12 && secs < 5.0;
  c.detail = "max |m1(Fu)| / (beta m_{1+gamma}(u)) = " + fmt(worst) + " over 1000 random densities";
  return c;
}

inline CriterionResult crit_profile_oracle(VerifyContext& ctx) {
  const double t0 = now_seconds();
  const Profile& prof = ctx.profile();
  const auto& grid = *ctx.grid();
  double err = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.centers()[i];
    err += std::abs(prof.u.values[i] - std::exp(-x)) * x * grid.widths()[i];
  }
  const double M2 = prof.moment_of(2.0);
  const double secs = now_seconds() - t0;
  CriterionResult c{2, "closed-form profile oracle", false, "", secs};
  c.pass = err < 1e-3 && std::abs(prof.M0 - 1.0) < 0.01 && std::abs(M2 - 2.0) < 0.02 &&
           secs < 30.0;
  c.detail = "L1(x dx) error = " + fmt(err) + ", M0 = " + fmt(prof.M0) + ", M2 = " + fmt(M2) +
             ", residual = " + fmt(prof.residual);
  return c;
}

inline CriterionResult crit_linear_flow(VerifyContext& ctx) {
  const double t0 = now_seconds();
  Density u0 = density_from(ctx.grid(), [](double x) { return x * std::exp(-2.0 * x); });
  const double mass = moment(u0, 1.0);
  for (auto& v : u0.values) v /= mass;
  const GapEstimate gap = estimate_gap(u0, ctx.canonical(), ctx.frag(), ctx.profile());
  const double secs = now_seconds() - t0;
  CriterionResult c{3, "linear flow mass conservation and spectral gap", false, "", secs};
  c.pass = !gap.degenerate && gap.max_mass_drift <= 1e-10 && gap.a > 0.0 &&
           gap.fit_residual < 0.05;
  c.detail = "mass drift = " + fmt(gap.max_mass_drift) + ", a = " + fmt(gap.a) +
             ", C = " + fmt(gap.C) + ", fit residual = " + fmt(gap.fit_residual) +
             " on t in [" + fmt(gap.window_t0) + ", " + fmt(gap.window_t1) + "]";
  return c;
}

inline CriterionResult crit_dfe_regime(VerifyContext& ctx) {
  const double t0 = now_seconds();
  ModelParams p = ctx.canonical();
  p.lambda = 0.5;  // R0 = 1/2
  PrionSystem sys(assemble(ctx.grid(), p, ctx.kernel()), p);
  SystemState init;
  init.V = 2.0;
  init.u = density_from(ctx.grid(), [](double x) { return 0.1 * std::exp(-x); });
  SimulateOptions opts;
  opts.horizon = 50.0;
  opts.output_every = 0.1;
  const Trajectory traj = sys.simulate(std::move(init), opts);
  const MonitorReport mon = lyapunov_monitor(traj, p);
  const auto& last = traj.samples.back();
  const double v_bar = p.lambda / p.delta;
  const double rate_bound = 0.9 * std::min(p.mu - p.tau * v_bar, 2.0 * p.delta);
  const double secs = now_seconds() - t0;
  CriterionResult c{4, "subcritical regime decay to the disease-free state", false, "", secs};
  c.pass = last.m1 < 1e-6 && std::abs(last.V - v_bar) < 1e-4 &&
           mon.max_forward_diff <= 1e-8 * mon.max_L && mon.decay_rate >= rate_bound &&
           secs < 60.0;
  c.detail = "m1(50) = " + fmt(last.m1) + ", |V - 0.5| = " + fmt(std::abs(last.V - v_bar)) +
             ", max dL = " + fmt(mon.max_forward_diff) + ", L decay rate = " +
             fmt(mon.decay_rate) + " (bound " + fmt(rate_bound) + ")";
  return c;
}

inline CriterionResult crit_critical_regime(VerifyContext& ctx) {
  const double t0 = now_seconds();
  ModelParams p = ctx.canonical();
  p.lambda = 1.0;  // R0 = 1
  p.omega = 1.0;
  PrionSystem sys(assemble(ctx.grid(), p, ctx.kernel()), p);
  SystemState init;
  init.V = 2.0;
  init.u = density_from(ctx.grid(), [](double x) { return 0.1 * std::exp(-x); });
  SimulateOptions opts;
  opts.horizon = 200.0;
  opts.output_every = 0.1;
  const Trajectory traj = sys.simulate(std::move(init), opts);
  const MonitorReport mon = lyapunov_monitor(traj, p);
  const double tl_ratio = mon.tail_tL_max / mon.tail_tL_min;
  const double secs = now_seconds() - t0;
  CriterionResult c{5, "critical regime Lyapunov decay", false, "", secs};
  c.pass = mon.max_forward_diff <= 1e-8 * mon.max_L && std::isfinite(mon.tail_tL_max) &&
           tl_ratio <= 1.25 && mon.inv_L_slope > 0.0 && secs < 120.0;
  c.detail = "max dL = " + fmt(mon.max_forward_diff) + ", tail t*L in [" + fmt(mon.tail_tL_min) +
             ", " + fmt(mon.tail_tL_max) + "], d(1/L)/dt = " + fmt(mon.inv_L_slope);
  return c;
}

inline CriterionResult crit_ee_regime(VerifyContext& ctx) {
  const Trajectory& traj = ctx.ee_trajectory();
  const double t0 = now_seconds();
  const auto& last = traj.samples.back();
  const MonitorReport mon = persistence_monitor(traj, ctx.canonical());
  const double secs = (now_seconds() - t0) + ctx.ee_run_seconds();
  CriterionResult c{6, "endemic regime convergence and persistence", false, "", secs};
  c.pass = std::abs(last.V - 1.0) < 1e-2 && std::abs(last.m1 - 1.0) < 1e-2 &&
           mon.persistence_applicable && mon.persistence_floor >= 0.5 && secs < 120.0;
  c.detail = "|V(100) - 1| = " + fmt(std::abs(last.V - 1.0)) + ", |m1(100) - 1| = " +
             fmt(std::abs(last.m1 - 1.0)) + ", persistence floor = " +
             fmt(mon.persistence_floor);
  return c;
}

inline CriterionResult crit_reduction_exactness(VerifyContext& ctx) {
  const double t0 = now_seconds();
  const TransformResult& tr = ctx.ee_transform();
  auto rate_ok = [](double r) { return r > 0.0 || std::isinf(r); };
  const double secs = now_seconds() - t0;
  CriterionResult c{7, "change-of-variables exactness and moment decay", false, "", secs};
  c.pass = tr.max_abs_eps1 <= 1e-10 && rate_ok(tr.rate_eps0) && rate_ok(tr.rate_epsp) &&
           rate_ok(tr.rate_epsr) && tr.min_w_lower_bound >= 1.0 - 1e-8;
  c.detail = "max |eps1| = " + fmt(tr.max_abs_eps1) + ", decay rates (eps0, epsp, epsr) = (" +
             fmt(tr.rate_eps0) + ", " + fmt(tr.rate_epsp) + ", " + fmt(tr.rate_epsr) +
             "), min W(1+gamma mu t) = " + fmt(tr.min_w_lower_bound);
  return c;
}

inline CriterionResult crit_reduction_consistency(VerifyContext& ctx) {
  const double t0 = now_seconds();
  const TransformResult& tr = ctx.ee_transform();
  EpsSeriesData eps;
  eps.t = tr.eps.t;
  eps.value = tr.eps.epsp;
  ReducedState init{Formulation::VWQ, {2.0, 1.0, tr.rho0}};
  const ReducedTrajectory ode =
      integrate_reduced(init, ctx.canonical(), ctx.profile().Mp, tr.t, eps, 0.01);
  const ConsistencyReport rep = consistency_check(tr, ode);
  const double secs = now_seconds() - t0;
  CriterionResult c{8, "PDE to reduced-ODE consistency", false, "", secs};
  const double worst = std::max({rep.sup_dV, rep.sup_dW, rep.sup_dQ});
  c.pass = worst < 5e-3;
  c.detail = "sup |dV| = " + fmt(rep.sup_dV) + ", sup |dW| = " + fmt(rep.sup_dW) +
             ", sup |dQ| = " + fmt(rep.sup_dQ) + ", sup |dP| = " + fmt(rep.sup_dP);
  return c;
}

struct RandomParamSample {
  ModelParams params;
  double Mp;
};

inline RandomParamSample random_supercritical(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> punif(0.0, 2.0);
  for (;;) {
    ModelParams p;
    p.lambda = log_uniform(rng, 0.1, 10.0);
    p.delta = log_uniform(rng, 0.1, 10.0);
    p.tau = log_uniform(rng, 0.1, 10.0);
    p.mu = log_uniform(rng, 0.1, 10.0);
    p.beta = log_uniform(rng, 0.1, 10.0);
    p.gamma = log_uniform(rng, 0.1, 10.0);
    p.omega = log_uniform(rng, 0.1, 10.0);
    p.p = punif(rng);
    p.r = std::max(2.0, p.p);
    if (r0(p) <= 1.0) continue;
    return {p, log_uniform(rng, 0.1, 10.0)};
  }
}

inline CriterionResult crit_stability_analyzer(VerifyContext& ctx) {
  const double t0 = now_seconds();
  CriterionResult c{9, "endemic equilibrium linear stability analyzer", false, "", 0.0};

  // canonical mass-action case: triple eigenvalue -1
  const JacobianEE jac = jacobian_ee(ctx.canonical(), 1.0);
  const RouthHurwitz rh = routh_hurwitz(jac.T, jac.D, jac.M);
  double eig_err = 0.0;
  for (const auto& ev : rh.eigenvalues) eig_err = std::max(eig_err, std::abs(ev + 1.0));
  const bool canonical_ok = std::abs(jac.T + 3.0) < 1e-12 && std::abs(jac.M - 3.0) < 1e-12 &&
                            std::abs(jac.D + 1.0) < 1e-12 && eig_err < 1e-8 && rh.pass;

  auto rng = ctx.rng(9);
  int sign_ok = 0, rh_eig_ok = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const auto s = random_supercritical(rng);
    const JacobianEE J = jacobian_ee(s.params, s.Mp);
    const RouthHurwitz v = routh_hurwitz(J.T, J.D, J.M);
    if (J.T < 0.0 && J.D < 0.0 && J.M * J.T < J.D) ++sign_ok;
    if (v.pass == (v.max_real < 0.0)) ++rh_eig_ok;
  }
  c.seconds = now_seconds() - t0;
  c.pass = canonical_ok && sign_ok == trials && rh_eig_ok == trials;
  c.detail = "canonical (T, M, D) = (" + fmt(jac.T) + ", " + fmt(jac.M) + ", " + fmt(jac.D) +
             "), max |eig + 1| = " + fmt(eig_err) + "; sign conditions " +
             std::to_string(sign_ok) + "/1000, criterion-vs-eigenvalue agreement " +
             std::to_string(rh_eig_ok) + "/1000";
  return c;
}

inline CriterionResult crit_equilibrium_formulas(VerifyContext& ctx) {
  const double t0 = now_seconds();
  auto rng = ctx.rng(10);
  double worst_res = 0.0;
  int interval_ok = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const auto s = random_supercritical(rng);
    const Equilibria eq = equilibria(s.params, s.Mp);
    const double denom = 1.0 + s.params.omega * s.Mp * eq.Q_inf;
    const double r1 =
        std::abs(s.params.lambda -
                 (s.params.delta * eq.V_inf + s.params.tau * eq.V_inf * eq.Q_inf / denom)) /
        s.params.lambda;
    const double r2 = std::abs(s.params.mu - s.params.tau * eq.V_inf / denom) / s.params.mu;
    worst_res = std::max({worst_res, r1, r2});
    if (eq.V_inf > s.params.mu / s.params.tau && eq.V_inf < s.params.lambda / s.params.delta)
      ++interval_ok;
  }
  CriterionResult c{10, "equilibrium formulas", false, "", now_seconds() - t0};
  c.pass = worst_res <= 1e-12 && interval_ok == trials;
  c.detail = "max equilibrium residual = " + fmt(worst_res) + ", V_inf in (mu/tau, lambda/delta) " +
             std::to_string(interval_ok) + "/1000";
  return c;
}

inline CriterionResult crit_cooperative(VerifyContext& ctx) {
  const double t0 = now_seconds();
  (void)ctx;
  int agree = 0, total = 0;
  for (int ip = 0; ip < 10; ++ip) {
    for (int id = 0; id < 10; ++id) {
      for (int im = 0; im < 10; ++im) {
        ModelParams p;
        p.p = 0.25 * (ip + 1);
        p.delta = 0.2 * (id + 1);
        p.mu = 0.2 * (im + 1);
        p.omega = 1.0;
        p.r = 3.0;
        const bool expected = (p.p >= 1.0) && (p.delta >= p.mu);
        if (cooperative_check(p).cooperative == expected) ++agree;
        ++total;
      }
    }
  }
  CriterionResult c{11, "cooperative-structure detector", false, "", now_seconds() - t0};
  c.pass = agree == total;
  c.detail = "agreement " + std::to_string(agree) + "/" + std::to_string(total) +
             " on the (p, delta, mu) grid";
  return c;
}

}  // namespace verify_detail

// forward declaration: criterion 12 reruns a suite and compares manifests
inline std::string run_suite_to_dir(const std::string& suite, uint64_t seed,
                                    const std::filesystem::path& out_dir);

namespace verify_detail {

inline CriterionResult crit_determinism(VerifyContext& ctx, const std::filesystem::path& work) {
  const double t0 = now_seconds();
  const std::string m1 = run_suite_to_dir("stability", ctx.seed(), work / "determinism_a");
  const std::string m2 = run_suite_to_dir("stability", ctx.seed(), work / "determinism_b");
  CriterionResult c{12, "deterministic outputs", false, "", now_seconds() - t0};
  c.pass = !m1.empty() && m1 == m2;
  c.detail = c.pass ? "two identically seeded runs produced byte-identical manifests"
                    : "manifests differ between identically seeded runs";
  return c;
}

}  // namespace verify_detail

/// Runs the requested verification suite. Known suites: conservation,
/// profile, dfe, critical, ee, reduction, stability, persistence, all.
inline std::vector<CriterionResult> run_suite(const std::string& suite, uint64_t seed,
                                              const std::filesystem::path& work_dir = "verify_work") {
  using namespace verify_detail;
  VerifyContext ctx(seed);
  std::vector<CriterionResult> out;

  auto persistence_only = [&]() {
    const MonitorReport mon = persistence_monitor(ctx.ee_trajectory(), ctx.canonical());
    CriterionResult c{6, "persistence floor and boundedness", false, "", ctx.ee_run_seconds()};
    c.pass = mon.persistence_applicable && mon.persistence_floor >= 0.5 &&
             mon.max_V_plus_P <= mon.bound_K0 + 1e-8;
    c.detail = "floor = " + fmt(mon.persistence_floor) + ", max(V + P) = " +
               fmt(mon.max_V_plus_P) + " vs K0 = " + fmt(mon.bound_K0);
    return c;
  };

  if (suite == "conservation") {
    out.push_back(crit_conservation(ctx));
  } else if (suite == "profile") {
    out.push_back(crit_profile_oracle(ctx));
    out.push_back(crit_linear_flow(ctx));
  } else if (suite == "dfe") {
    out.push_back(crit_dfe_regime(ctx));
  } else if (suite == "critical") {
    out.push_back(crit_critical_regime(ctx));
  } else if (suite == "ee") {
    out.push_back(crit_ee_regime(ctx));
  } else if (suite == "reduction") {
    out.push_back(crit_reduction_exactness(ctx));
    out.push_back(crit_reduction_consistency(ctx));
  } else if (suite == "stability") {
    out.push_back(crit_stability_analyzer(ctx));
    out.push_back(crit_equilibrium_formulas(ctx));
    out.push_back(crit_cooperative(ctx));
  } else if (suite == "persistence") {
    out.push_back(persistence_only());
  } else if (suite == "all") {
    out.push_back(crit_conservation(ctx));
    out.push_back(crit_profile_oracle(ctx));
    out.push_back(crit_linear_flow(ctx));
    out.push_back(crit_dfe_regime(ctx));
    out.push_back(crit_critical_regime(ctx));
    out.push_back(crit_ee_regime(ctx));
    out.push_back(crit_reduction_exactness(ctx));
    out.push_back(crit_reduction_consistency(ctx));
    out.push_back(crit_stability_analyzer(ctx));
    out.push_back(crit_equilibrium_formulas(ctx));
    out.push_back(crit_cooperative(ctx));
    out.push_back(crit_determinism(ctx, work_dir));
  } else {
    throw ConfigError("unknown verify suite '" + suite +
                      "' (expected conservation, profile, dfe, critical, ee, reduction, "
                      "stability, persistence or all)");
  }
  return out;
}

/// Runs a suite, writes report + manifest into out_dir, returns the manifest
/// text (used both by the CLI and by the determinism criterion).
inline std::string run_suite_to_dir(const std::string& suite, uint64_t seed,
                                    const std::filesystem::path& out_dir) {
  const auto results = run_suite(suite, seed, out_dir);
  OutputWriter writer(out_dir);
  json report = json::array();
  bool all_pass = true;
  for (const auto& c : results) {
    json entry = criterion_to_json(c);
    entry.erase("seconds");  // timings vary run to run; keep the manifest reproducible
    report.push_back(entry);
    all_pass = all_pass && c.pass;
  }
  writer.write_json("verify_report.json", json{{"suite", suite}, {"seed", seed},
                                               {"all_pass", all_pass}, {"criteria", report}});
  return writer.write_manifest();
}

}  // namespace prionlab
