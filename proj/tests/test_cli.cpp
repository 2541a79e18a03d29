// End-to-end checks of the command-line tool: exit codes, artifact layout,
// and run-to-run determinism. The binary path comes from the build system.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "prionlab/io.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PRIONLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    work_ = fs::temp_directory_path() / "prionlab_cli_test";
    fs::remove_all(work_);
    fs::create_directories(work_);
  }
  void TearDown() override { fs::remove_all(work_); }

  fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path p = work_ / name;
    std::ofstream(p) << body;
    return p;
  }

  fs::path work_;
};

TEST_F(CliTest, StabilityWithDefaultsSucceeds) {
  const fs::path out = work_ / "stability";
  ASSERT_EQ(run_cli("stability --out " + out.string()), 0);
  const auto j = prionlab::json::parse(slurp(out / "stability.json"));
  EXPECT_DOUBLE_EQ(j.at("R0").get<double>(), 2.0);
  EXPECT_DOUBLE_EQ(j.at("ee").at("V_inf").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j.at("ee").at("Q_inf").get<double>(), 1.0);
  EXPECT_TRUE(j.at("routh_hurwitz_pass").get<bool>());
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_TRUE(fs::exists(out / "config.json"));
}

TEST_F(CliTest, InvalidConfigExitsWithTwo) {
  const fs::path cfg = write_config("bad.json", R"({"params": {"gamma": 0.0}})");
  EXPECT_EQ(run_cli("stability --config " + cfg.string() + " --out " + (work_ / "o").string()),
            2);
}

TEST_F(CliTest, MalformedJsonExitsWithTwo) {
  const fs::path cfg = write_config("broken.json", "{nope");
  EXPECT_EQ(run_cli("stability --config " + cfg.string() + " --out " + (work_ / "o").string()),
            2);
}

TEST_F(CliTest, ConfigIsEchoedVerbatim) {
  const std::string body = R"({"params": {"lambda": 2.0},  "note": "spacing preserved"})";
  const fs::path cfg = write_config("cfg.json", body);
  const fs::path out = work_ / "echo";
  ASSERT_EQ(run_cli("stability --config " + cfg.string() + " --out " + out.string()), 0);
  EXPECT_EQ(slurp(out / "config.json"), body);
}

TEST_F(CliTest, SweepWritesTheGridCsv) {
  const fs::path cfg = write_config("sweep.json", R"({
    "params": {"omega": 1.0},
    "sweep": {"lambda": [0.5, 1.0, 2.0, 4.0], "mu": [0.5, 1.0]}
  })");
  const fs::path out = work_ / "sweep";
  ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + out.string() +
                    " --threads 2"),
            0);
  const std::string csv = slurp(out / "sweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "lambda,delta,tau,mu,beta,gamma,omega,p,r,M_p,R0,has_ee,rh_pass,max_re_eig,"
            "cooperative");
  // header + 8 combos
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}

TEST_F(CliTest, SweepIsDeterministicAcrossThreadCounts) {
  const fs::path cfg = write_config("sweep.json", R"({
    "params": {"omega": 0.5},
    "sweep": {"lambda": [0.5, 1.5, 2.5], "delta": [0.5, 1.0], "p": [0.5, 1.5]}
  })");
  const fs::path out1 = work_ / "s1", out2 = work_ / "s2";
  ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + out1.string() +
                    " --threads 1"),
            0);
  ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + out2.string() +
                    " --threads 4"),
            0);
  EXPECT_EQ(slurp(out1 / "sweep.csv"), slurp(out2 / "sweep.csv"));
  EXPECT_EQ(slurp(out1 / "manifest.json"), slurp(out2 / "manifest.json"));
}

TEST_F(CliTest, VerifyConservationSuitePasses) {
  const fs::path out = work_ / "verify";
  ASSERT_EQ(run_cli("verify --suite conservation --out " + out.string()), 0);
  const auto j = prionlab::json::parse(slurp(out / "verify_report.json"));
  EXPECT_TRUE(j.at("all_pass").get<bool>());
  EXPECT_EQ(j.at("criteria").size(), 1u);
}

TEST_F(CliTest, UnknownSuiteExitsWithTwo) {
  EXPECT_EQ(run_cli("verify --suite everything --out " + (work_ / "v").string()), 2);
}

TEST_F(CliTest, SimulateReduceOdePipeline) {
  const fs::path cfg = write_config("sim.json", R"({
    "params": {"lambda": 2.0, "omega": 0.0, "p": 1.0, "r": 2.0},
    "grid": {"n_cells": 200, "x_min": 1e-4, "x_max": 50.0, "layout": "geometric"},
    "initial": {"V0": 2.0, "u0": {"type": "exponential", "scale": 0.1, "rate": 1.0}},
    "horizon": 5.0, "output_every": 0.5, "snapshot_every": 2.5
  })");
  const fs::path run = work_ / "run";
  ASSERT_EQ(run_cli("simulate --config " + cfg.string() + " --out " + run.string()), 0);
  EXPECT_TRUE(fs::exists(run / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(run / "transform.csv"));
  EXPECT_TRUE(fs::exists(run / "snapshots" / "u_0000.csv"));

  const fs::path red = work_ / "reduced";
  ASSERT_EQ(run_cli("reduce --run " + run.string() + " --out " + red.string()), 0);
  const std::string csv = slurp(red / "reduced.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,W,h,Q,P,Y,eps_0,eps_1,eps_p,eps_r");
  const auto j = prionlab::json::parse(slurp(red / "reduce.json"));
  EXPECT_LE(j.at("max_abs_eps1").get<double>(), 1e-10);

  const fs::path ode = work_ / "ode";
  const fs::path ocfg = write_config("ode.json", R"({
    "params": {"lambda": 2.0},
    "ode": {"formulation": "vwq", "initial": {"V": 2.0, "W": 1.0, "Q": 0.1},
            "horizon": 5.0, "output_every": 0.5, "M_p": 1.0}
  })");
  ASSERT_EQ(run_cli("ode --config " + ocfg.string() + " --out " + ode.string()), 0);
  EXPECT_TRUE(fs::exists(ode / "ode.csv"));

  // drive the same system with a recorded eps_p series
  std::ofstream(work_ / "eps.csv") << "t,value\n0.0,0.2\n2.5,0.05\n5.0,0.0\n";
  const fs::path ocfg2 = write_config("ode_series.json", std::string(R"({
    "params": {"lambda": 2.0, "omega": 1.0},
    "ode": {"formulation": "vwp", "initial": {"V": 2.0, "W": 1.0, "P": 0.1},
            "eps": {"type": "series", "path": ")") +
                                            (work_ / "eps.csv").string() + R"("},
            "horizon": 5.0, "output_every": 0.5, "M_p": 1.0}
  })");
  ASSERT_EQ(run_cli("ode --config " + ocfg2.string() + " --out " +
                    (work_ / "ode2").string()),
            0);
  EXPECT_TRUE(fs::exists(work_ / "ode2" / "ode.csv"));
}

TEST_F(CliTest, NumericalFailureExitsWithThreeAndWritesDiagnostic) {
  // reduced-system blow-up: lambda far beyond the guard
  const fs::path cfg = write_config("blowup.json", R"({
    "params": {"lambda": 1e13},
    "ode": {"formulation": "vwq", "initial": {"V": 1.0, "W": 1.0, "Q": 1.0},
            "horizon": 10.0, "output_every": 1.0, "M_p": 1.0}
  })");
  const fs::path out = work_ / "blowup";
  EXPECT_EQ(run_cli("ode --config " + cfg.string() + " --out " + out.string()), 3);
  const auto j = prionlab::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(j.at("status"), "numerical_failure");
  EXPECT_FALSE(j.at("diagnostic").get<std::string>().empty());
}

}  // namespace
