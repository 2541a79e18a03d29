#include <gtest/gtest.h>

#include "prionlab/params.hpp"

using namespace prionlab;

namespace {

ModelParams canonical() {
  ModelParams p;
  p.lambda = 2.0;
  p.delta = p.tau = p.mu = p.beta = p.gamma = 1.0;
  p.omega = 0.0;
  p.p = 1.0;
  p.r = 2.0;
  return p;
}

TEST(Params, CanonicalSetValidates) {
  const ModelParams p = validate_params(canonical());
  EXPECT_EQ(p.lambda, 2.0);
  EXPECT_TRUE(param_violations(p).empty());
}

TEST(Params, WeightExponentMustDominate) {
  ModelParams p = canonical();
  p.r = 0.5;
  const auto errs = param_violations(p);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_NE(errs[0].find("r must satisfy r>1 and r>=p"), std::string::npos);
  EXPECT_THROW(validate_params(p), ConfigError);
}

TEST(Params, GammaMustBePositive) {
  ModelParams p = canonical();
  p.gamma = 0.0;
  try {
    validate_params(p);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma must be > 0"), std::string::npos);
  }
}

TEST(Params, CollectsAllViolations) {
  ModelParams p = canonical();
  p.lambda = -1.0;
  p.mu = 0.0;
  p.omega = -0.5;
  EXPECT_EQ(param_violations(p).size(), 3u);
}

TEST(Params, DerivedExponent) {
  ModelParams p = canonical();
  p.gamma = 0.5;
  EXPECT_DOUBLE_EQ(p.k(), 2.0);
}

TEST(R0, DirectSubstitution) {
  ModelParams p = canonical();
  p.lambda = 1.0;
  EXPECT_DOUBLE_EQ(r0(p), 1.0);
  p.lambda = 2.0;
  EXPECT_DOUBLE_EQ(r0(p), 2.0);
  p.lambda = 0.5;
  EXPECT_DOUBLE_EQ(r0(p), 0.5);
}

TEST(R0, IndependentOfFragmentationCoefficients) {
  ModelParams p = canonical();
  const double base = r0(p);
  for (double beta : {0.1, 1.0, 7.5}) {
    for (double gamma : {0.3, 1.0, 2.0}) {
      p.beta = beta;
      p.gamma = gamma;
      EXPECT_DOUBLE_EQ(r0(p), base);
    }
  }
}

TEST(FragKernel, UniformNormalization) {
  EXPECT_LE(kernel_normalization_check(FragKernel::uniform(), 128), 1e-12);
}

TEST(FragKernel, SymmetricPowerNormalization) {
  // a = 1: wp(z) = 6 z (1 - z), so 2 int z wp = 1 exactly
  const FragKernel k = FragKernel::symmetric_power(1.0);
  EXPECT_NEAR(k.norm_constant(), 6.0, 1e-12);
  EXPECT_LE(kernel_normalization_check(k, 256), 1e-10);
}

TEST(FragKernel, ZeroExponentReducesToUniform) {
  const FragKernel k = FragKernel::symmetric_power(0.0);
  EXPECT_NEAR(k.norm_constant(), 1.0, 1e-14);
  EXPECT_LE(kernel_normalization_check(k, 16), 1e-12);
  EXPECT_DOUBLE_EQ(k(0.37), 1.0);
}

TEST(FragKernel, Symmetry) {
  const FragKernel k = FragKernel::symmetric_power(1.7);
  for (double z : {0.1, 0.25, 0.4, 0.49}) EXPECT_NEAR(k(z), k(1.0 - z), 1e-14);
}

TEST(FragKernel, ResidualShrinksUnderRefinement) {
  const FragKernel k = FragKernel::symmetric_power(1.5);
  const double coarse = kernel_normalization_check(k, 64);
  const double fine = kernel_normalization_check(k, 256);
  EXPECT_GT(coarse, 0.0);
  EXPECT_LT(fine, coarse);
}

TEST(FragKernel, QuadraturePrecondition) {
  EXPECT_THROW(kernel_normalization_check(FragKernel::uniform(), 1), ConfigError);
  EXPECT_THROW(FragKernel::symmetric_power(-1.0), ConfigError);
}

}  // namespace
