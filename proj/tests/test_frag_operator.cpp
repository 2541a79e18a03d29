#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "prionlab/frag_operator.hpp"

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

TEST(FragMatrix, SingleCellConservationForcesTheEntry) {
  auto g = SizeGrid::uniform(1, 0.5, 1.5);
  const FragMatrix F = assemble(g, canonical(), FragKernel::uniform());
  const double x0 = g->centers()[0], w0 = g->widths()[0];
  EXPECT_NEAR(x0 * w0 * F.gain(0, 0), x0 * F.loss(0), 1e-14);
  Density u(g);
  u.values[0] = 2.0;
  EXPECT_NEAR(moment(F.apply(u), 1.0), 0.0, 1e-14);
}

TEST(FragMatrix, ColumnMassBalanceIsExact) {
  auto g = SizeGrid::geometric(200, 1e-3, 30.0);
  const FragMatrix F = assemble(g, canonical(), FragKernel::uniform());
  const auto& x = g->centers();
  const auto& w = g->widths();
  for (int j = 0; j < g->size(); j += 13) {
    double colsum = 0.0;
    for (int i = 0; i <= j; ++i) colsum += x[i] * w[i] * F.gain(i, j);
    EXPECT_NEAR(colsum, x[j] * F.loss(j), 1e-13 * x[j] * F.loss(j));
  }
}

TEST(FragMatrix, UniformKernelGainDensity) {
  // kappa = 1/y spreads fragments uniformly in x: for gamma = 1 the corrected
  // gain stays close to the analytic value 2*beta on full cells.
  auto g = SizeGrid::geometric(400, 1e-4, 50.0);
  const FragMatrix F = assemble(g, canonical(), FragKernel::uniform());
  const int j = 300;
  for (int i = 10; i < j; i += 37)
    EXPECT_NEAR(F.gain(i, j), F.gain(10, j), 1e-12 * F.gain(10, j));
  EXPECT_NEAR(F.gain(10, j) / 2.0, 1.0, 0.05);
  // the diagonal cell only receives fragments below its center
  EXPECT_NEAR(F.gain(j, j) / F.gain(10, j), 0.5, 0.05);
}

TEST(FragMatrix, Triangularity) {
  auto g = SizeGrid::geometric(60, 1e-2, 10.0);
  const FragMatrix F = assemble(g, canonical(), FragKernel::symmetric_power(1.0));
  for (int i = 0; i < g->size(); ++i)
    for (int j = 0; j < i; ++j) EXPECT_EQ(F.gain(i, j), 0.0);
}

TEST(FragMatrix, ConservationOnRandomDensities) {
  auto g = SizeGrid::geometric(400, 1e-4, 50.0);
  ModelParams p = canonical();
  p.beta = 0.7;
  p.gamma = 1.3;
  const FragMatrix F = assemble(g, p, FragKernel::uniform());
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Density u(g);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    for (auto& v : u.values) v = unif(rng);
    const double lhs = std::abs(moment(F.apply(u), 1.0));
    worst = std::max(worst, lhs / (p.beta * moment(u, 1.0 + p.gamma)));
  }
  EXPECT_LE(worst, 1e-13);
}

TEST(FragMatrix, GainPartIsNonnegative) {
  auto g = SizeGrid::geometric(150, 1e-3, 20.0);
  const FragMatrix F = assemble(g, canonical(), FragKernel::symmetric_power(2.0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Density u(g);
  for (auto& v : u.values) v = unif(rng);
  const Density fu = F.apply(u);
  for (int i = 0; i < g->size(); ++i) {
    const double gain = fu.values[i] + F.loss(i) * u.values[i];
    EXPECT_GE(gain, -1e-15);
  }
}

TEST(FragMatrix, BinaryFragmentationDoublesTheCount) {
  // uniform kernel: int F u dx = beta int x^gamma u dx
  auto g = SizeGrid::geometric(400, 1e-4, 50.0);
  ModelParams p = canonical();
  const FragMatrix F = assemble(g, p, FragKernel::uniform());
  const Density u = density_from(g, [](double x) { return std::exp(-x); });
  EXPECT_NEAR(moment(F.apply(u), 0.0), p.beta * moment(u, p.gamma),
              0.01 * p.beta * moment(u, p.gamma));
}

TEST(FragMatrix, NumberProductionGeneralExponent) {
  auto g = SizeGrid::geometric(400, 1e-4, 50.0);
  ModelParams p = canonical();
  p.beta = 0.5;
  p.gamma = 2.0;
  const FragMatrix F = assemble(g, p, FragKernel::uniform());
  const Density u = density_from(g, [](double x) { return std::exp(-x); });
  EXPECT_NEAR(moment(F.apply(u), 0.0), p.beta * moment(u, p.gamma),
              0.01 * p.beta * moment(u, p.gamma));
}

TEST(FragMatrix, ApplyZeroDensity) {
  auto g = SizeGrid::geometric(50, 1e-2, 5.0);
  const FragMatrix F = assemble(g, canonical(), FragKernel::uniform());
  const Density fu = F.apply(Density(g));
  for (double v : fu.values) EXPECT_EQ(v, 0.0);
}

TEST(FragMatrix, MassInLargestCellSpreadsUniformly) {
  auto g = SizeGrid::geometric(200, 1e-3, 20.0);
  const FragMatrix F = assemble(g, canonical(), FragKernel::uniform());
  const int last = g->size() - 1;
  Density u(g);
  u.values[last] = 1.0 / g->widths()[last];
  const Density fu = F.apply(u);
  // gains on full interior cells all equal (number density per unit x is 1/y)
  const double ref = fu.values[50];
  for (int i = 10; i < 150; i += 20) EXPECT_NEAR(fu.values[i], ref, 1e-12 * std::abs(ref));
  EXPECT_NEAR(moment(fu, 1.0), 0.0, 1e-13 * F.loss(last));
}

TEST(FragMatrix, SymmetricPowerAssemblyConserves) {
  auto g = SizeGrid::geometric(300, 1e-4, 40.0);
  ModelParams p = canonical();
  const FragMatrix F = assemble(g, p, FragKernel::symmetric_power(1.0));
  const Density u = density_from(g, [](double x) { return x * std::exp(-x); });
  EXPECT_NEAR(moment(F.apply(u), 1.0), 0.0, 1e-13 * p.beta * moment(u, 2.0));
}

}  // namespace
