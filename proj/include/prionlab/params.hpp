#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace prionlab {

/// Thrown when a configuration or parameter set violates a model assumption.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an integration or solve fails (CFL violation, blow-up, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Scalar coefficients of the prion model with general incidence:
///   dV/dt = lambda - delta V - V/(1 + omega \int x^p u) \int tau x u dx
///   du/dt = -V/(1 + omega \int x^p u) d_x(tau x u) - mu u + F u
/// with fragmentation rate beta x^gamma. The space weight exponent r defines
/// the working norm ||u||_0 + ||u||_r.
struct ModelParams {
  double lambda = 2.0;  // monomer production rate
  double delta = 1.0;   // monomer degradation rate
  double tau = 1.0;     // polymerization coefficient (rate = tau * x)
  double mu = 1.0;      // polymer death rate
  double beta = 1.0;    // fragmentation coefficient (rate = beta * x^gamma)
  double gamma = 1.0;   // fragmentation exponent, > 0
  double omega = 0.0;   // saturation coefficient, >= 0
  double p = 1.0;       // saturation moment order, >= 0
  double r = 2.0;       // weight exponent of the working space, > 1, >= p

  // k = 1/gamma, always derived.
  double k() const { return 1.0 / gamma; }
};

/// Collects every violated constraint; empty means the params are valid.
inline std::vector<std::string> param_violations(const ModelParams& p) {
  std::vector<std::string> errs;
  auto positive = [&errs](double v, const char* name, const char* why) {
    if (!(v > 0.0) || !std::isfinite(v))
      errs.push_back(std::string(name) + " must be > 0 (" + why + ")");
  };
  positive(p.lambda, "lambda", "monomer production rate");
  positive(p.delta, "delta", "monomer degradation rate");
  positive(p.tau, "tau", "polymerization rate tau(x) = tau*x requires tau > 0");
  positive(p.mu, "mu", "constant polymer death rate");
  positive(p.beta, "beta", "fragmentation rate beta(x) = beta*x^gamma requires beta > 0");
  positive(p.gamma, "gamma", "fragmentation rate beta(x) = beta*x^gamma requires gamma > 0");
  if (!(p.omega >= 0.0) || !std::isfinite(p.omega))
    errs.push_back("omega must be >= 0 (saturation coefficient)");
  if (!(p.p >= 0.0) || !std::isfinite(p.p))
    errs.push_back("p must be >= 0 (saturation moment order)");
  if (!(p.r > 1.0) || !(p.r >= p.p) || !std::isfinite(p.r))
    errs.push_back("r must satisfy r>1 and r>=p (working-space weight must dominate the saturation moment)");
  return errs;
}

/// Returns the params unchanged iff every model assumption holds.
inline ModelParams validate_params(const ModelParams& p) {
  auto errs = param_violations(p);
  if (!errs.empty()) {
    std::string msg = "invalid model parameters:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return p;
}

/// Basic reproduction rate R0 = lambda*tau/(delta*mu). Does not depend on the
/// fragmentation coefficients.
inline double r0(const ModelParams& p) { return p.lambda * p.tau / (p.delta * p.mu); }

/// Self-similar fragment-size distribution wp on [0,1].
///
/// Families:
///  - Uniform: wp(z) = 1 (the homogeneous kernel kappa(x,y) = 1/y).
///  - SymmetricPower(a): wp(z) = c z^a (1-z)^a with c fixed in closed form by
///    the number-conservation normalization 2\int z wp(z) dz = 1.
/// Both are symmetric, smooth on (0,1), and have integrable derivative.
class FragKernel {
 public:
  enum class Family { Uniform, SymmetricPower };

  static FragKernel uniform() { return FragKernel(Family::Uniform, 0.0); }

  static FragKernel symmetric_power(double a) {
    if (!(a >= 0.0) || !std::isfinite(a))
      throw ConfigError("kernel exponent a must be >= 0");
    return FragKernel(Family::SymmetricPower, a);
  }

  Family family() const { return family_; }
  double exponent() const { return a_; }

  // Normalization constant from the Beta-function identity
  // 2c B(a+2, a+1) = 1, i.e. c = Gamma(2a+3) / (2 Gamma(a+2) Gamma(a+1)).
  double norm_constant() const {
    if (family_ == Family::Uniform) return 1.0;
    return 0.5 * std::exp(std::lgamma(2.0 * a_ + 3.0) - std::lgamma(a_ + 2.0) -
                          std::lgamma(a_ + 1.0));
  }

  double operator()(double z) const {
    if (family_ == Family::Uniform) return 1.0;
    if (z <= 0.0 || z >= 1.0) return a_ == 0.0 ? 1.0 : 0.0;
    return c_ * std::pow(z, a_) * std::pow(1.0 - z, a_);
  }

  bool symmetric() const { return true; }  // wp(z) = wp(1-z) for both families

 private:
  FragKernel(Family f, double a) : family_(f), a_(a), c_(0.0) { c_ = norm_constant(); }

  Family family_;
  double a_;
  double c_;
};

/// |2\int_0^1 z wp(z) dz - 1| by composite Simpson with `quad_points`
/// subintervals (rounded up to an even count, at least 2).
inline double kernel_normalization_check(const FragKernel& kernel, int quad_points) {
  if (quad_points < 2) throw ConfigError("quad_points must be >= 2");
  int n = quad_points + (quad_points % 2);
  const double hstep = 1.0 / n;
  auto f = [&kernel](double z) { return 2.0 * z * kernel(z); };
  double acc = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) acc += f(i * hstep) * (i % 2 == 1 ? 4.0 : 2.0);
  return std::abs(acc * hstep / 3.0 - 1.0);
}

}  // namespace prionlab
