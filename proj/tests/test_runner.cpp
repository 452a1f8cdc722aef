#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bbm/runner.hpp"

using namespace bbm;

namespace {

const char* kHatConfig = R"(
name: hat
seed: 11
space: {kind: euclidean, dim: 1}
family: {kind: gagliardo, grid: [0.5, 0.7, 0.9, 0.99]}
function: {kind: hat1d, anchor: [0]}
budgets: {pairs: 20000, grid_resolution_1d: 128, limit_resolution: 512, shell_samples: 20000}
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Extrapolate, ExactLine) {
  const Extrapolation e = extrapolate({0.4, 0.2, 0.1, 0.05}, {3.8, 3.4, 3.2, 3.1});
  EXPECT_NEAR(e.limit, 3.0, 1e-12);
  EXPECT_NEAR(e.slope, 2.0, 1e-12);
  EXPECT_FALSE(e.fallback);
}

TEST(Extrapolate, ConstantSequence) {
  const Extrapolation e = extrapolate({0.3, 0.2, 0.1}, {1.25, 1.25, 1.25}, {0.01, 0.01, 0.01});
  EXPECT_NEAR(e.limit, 1.25, 1e-12);
  EXPECT_NEAR(e.slope, 0.0, 1e-12);
}

TEST(Extrapolate, CurvedDataCoversTheLimit) {
  // 1.5 + 0.7 h - 2 h^2.
  const Extrapolation e =
      extrapolate({0.1, 0.05, 0.025, 0.0125}, {1.55, 1.53, 1.51625, 1.5084375});
  EXPECT_GT(e.uncertainty, 0.0);
  EXPECT_NEAR(e.limit, 1.5, e.uncertainty);
}

TEST(Extrapolate, OutlierSwitchesToLastValue) {
  const Extrapolation e =
      extrapolate({0.4, 0.2, 0.1, 0.05}, {1.0, 5.0, 1.0, 2.0}, {0.01, 0.01, 0.01, 0.01});
  EXPECT_TRUE(e.fallback);
  EXPECT_EQ(e.limit, 2.0);
}

TEST(Extrapolate, RejectsBadInput) {
  EXPECT_THROW(extrapolate({0.2, 0.1}, {1.0, 1.0}), InputError);
  EXPECT_THROW(extrapolate({0.1, 0.2, 0.05}, {1.0, 1.0, 1.0}), InputError);
  EXPECT_THROW(extrapolate({0.3, 0.2, 0.1}, {1.0, 1.0}), InputError);
}

TEST(Config, ParsesAndFillsDefaults) {
  const ExperimentConfig c = parse_config_string(kHatConfig);
  EXPECT_EQ(c.name, "hat");
  EXPECT_EQ(*c.seed, 11u);
  EXPECT_EQ(c.p, 2.0);
  EXPECT_EQ(c.family.kind, KernelKind::Gagliardo);
  EXPECT_EQ(c.function.kind, FunctionKind::Hat1D);
  EXPECT_EQ(c.budgets.pairs, 20000u);
  EXPECT_EQ(c.tolerance, 0.05);
  EXPECT_EQ(c.format, "csv");
}

TEST(Config, Errors) {
  std::string missing_seed = kHatConfig;
  missing_seed.replace(missing_seed.find("seed: 11"), 8, "");
  EXPECT_THROW(run_experiment(parse_config_string(missing_seed)), ConfigError);
  EXPECT_THROW(parse_config_string(std::string(kHatConfig) + "colour: blue\n"), ConfigError);
  std::string bad_kind = kHatConfig;
  bad_kind.replace(bad_kind.find("gagliardo"), 9, "triangle");
  EXPECT_THROW(parse_config_string(bad_kind), ConfigError);
  EXPECT_THROW(parse_config_string("name: [unclosed"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/dir/config.yaml"), ConfigError);
  std::string mismatch = kHatConfig;
  mismatch.replace(mismatch.find("dim: 1"), 6, "dim: 2");
  EXPECT_THROW(run_experiment(parse_config_string(mismatch)), ConfigError);
}

TEST(Config, BudgetScale) {
  ExperimentConfig c = parse_config_string(kHatConfig);
  apply_budget_scale(c, 0.5);
  EXPECT_EQ(c.budgets.pairs, 10000u);
}

TEST(Run, HatPassesAndWritesIdenticalOutputs) {
  const std::filesystem::path dir = std::filesystem::path(::testing::TempDir()) / "bbm_runner";
  std::filesystem::remove_all(dir);
  ExperimentConfig c = parse_config_string(kHatConfig);
  c.out_dir = (dir / "a").string();
  const ConvergenceReport rep = run_experiment(c);
  EXPECT_EQ(rep.verdict, Verdict::Pass) << report_text(rep);
  EXPECT_EQ(rep.rows.size(), 4u);
  const std::string first = write_outputs(rep, c);

  const std::string csv = slurp(first);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "parameter,energy,stderr,method,predicted,theta_reference");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "hat.txt"));

  c.out_dir = (dir / "b").string();
  const std::string second = write_outputs(run_experiment(c), c);
  EXPECT_EQ(slurp(second), csv);

  c.format = "json";
  const std::string json = write_outputs(rep, c);
  EXPECT_NE(slurp(json).find("\"verdict\""), std::string::npos);
}

TEST(Run, ZeroFunctionPasses) {
  ExperimentConfig c = parse_config_string(kHatConfig);
  c.function.amplitude = 0.0;
  const ConvergenceReport rep = run_experiment(c);
  EXPECT_EQ(rep.predicted, 0.0);
  EXPECT_EQ(rep.extrapolation.limit, 0.0);
  EXPECT_EQ(rep.verdict, Verdict::Pass);
}

TEST(Run, WrongConstantFails) {
  ExperimentConfig c = parse_config_string(kHatConfig);
  c.negative_control.claimed_C0_factor = 2.0;
  const ConvergenceReport rep = run_experiment(c);
  EXPECT_EQ(rep.verdict, Verdict::Fail);
  EXPECT_EQ(exit_code(rep.verdict), 1);
}

TEST(Run, StarvedBudgetIsInconclusive) {
  ExperimentConfig c = parse_config_string(kHatConfig);
  c.methods = EnergyMethods::MonteCarlo;
  c.inconclusive_stderr = 1e-6;
  EXPECT_EQ(run_experiment(c).verdict, Verdict::Inconclusive);
}

TEST(Format, PositionalSeventeenDigits) {
  EXPECT_EQ(format_decimal(0.0), "0");
  EXPECT_EQ(format_decimal(2.0), "2.0000000000000000");
  EXPECT_EQ(format_decimal(0.1), "0.10000000000000001");
  EXPECT_EQ(format_decimal(-1234.5), "-1234.5000000000000");
  EXPECT_EQ(format_decimal(1e-5).find('e'), std::string::npos);
  EXPECT_EQ(std::stod(format_decimal(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Verdicts, ExitCodes) {
  EXPECT_EQ(exit_code(Verdict::Pass), 0);
  EXPECT_EQ(exit_code(Verdict::Inconclusive), 2);
  EXPECT_EQ(to_string(Verdict::Inconclusive), "inconclusive");
}
