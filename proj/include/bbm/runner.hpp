#ifndef BBM_RUNNER_HPP
#define BBM_RUNNER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bbm/energy.hpp"
#include "bbm/limits.hpp"
#include "bbm/mollifiers.hpp"
#include "bbm/spaces.hpp"
#include "bbm/testbank.hpp"

namespace YAML {
class Node;
}

namespace bbm {

struct SpaceConfig {
  /// euclidean | lq | weighted | heisenberg
  std::string kind;
  int dim = 0;
  /// lq exponent; .inf for the max norm.
  double q = 2.0;
  /// Weighted backend: theta(x) = base + amplitude * sin(x[axis]).
  double weight_base = 2.0;
  double weight_amplitude = 1.0;
  int weight_axis = 0;
  MeasurePairing pairing = MeasurePairing::Asymmetric;
};

struct FamilyConfig {
  KernelKind kind = KernelKind::Indicator;
  std::vector<double> grid;
  double scale = 1.0;
  /// Required for user_radial; overrides the built-in constant otherwise.
  std::optional<double> claimed_C0;
  RadialTable table;
};

struct FunctionConfig {
  FunctionKind kind = FunctionKind::Hat1D;
  std::vector<double> anchor;
  double radius = 1.0;
  std::vector<double> direction;
  double amplitude = 1.0;
};

struct BudgetConfig {
  std::size_t pairs = 1000000;
  std::size_t shell_samples = 400000;
  /// Outer cells per axis of the energy grid oracle (1D / 2D).
  int grid_resolution_1d = 512;
  int grid_resolution_2d = 128;
  int grid_angles = 32;
  double grid_rel_tol = 1e-7;
  /// Outer cells per axis of the limit functional; 0 picks the module default.
  int limit_resolution = 0;
  int shards = 16;
  int strata = 64;
  int threads = 0;
};

enum class EnergyMethods { Auto, MonteCarlo, Grid };

struct NegativeControl {
  double claimed_C0_factor = 1.0;
  double gradient_factor = 1.0;
  double dimension_factor = 1.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  SpaceConfig space;
  FamilyConfig family;
  FunctionConfig function;
  double p = 2.0;
  std::optional<std::uint64_t> seed;
  BudgetConfig budgets;
  EnergyMethods methods = EnergyMethods::Auto;
  double tolerance = 0.05;
  /// Relative MC stderr at the final parameter above which the verdict is inconclusive.
  double inconclusive_stderr = 0.10;
  ValidationTolerances validation;
  NegativeControl negative_control;
  std::string out_dir = "out";
  /// csv | json
  std::string format = "csv";
};

/// Parses and checks a configuration; throws ConfigError with the offending key.
ExperimentConfig parse_config(const YAML::Node& root);
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Multiplies the MC pair and shell-sample budgets.
void apply_budget_scale(ExperimentConfig& config, double factor);

Space build_space(const ExperimentConfig& config);
MollifierFamily build_family(const ExperimentConfig& config, const Space& space);
TestFunction build_function(const ExperimentConfig& config);

struct Extrapolation {
  double limit = 0.0;
  double uncertainty = 0.0;
  double slope = 0.0;
  /// Residual chi^2 per degree of freedom of the linear model (0 without errors).
  double reduced_chi2 = 0.0;
  /// Linear model rejected; limit is the last value and uncertainty its stderr.
  bool fallback = false;
};

/// Weighted least squares of value against h (1/stderr^2 weights when every stderr is
/// positive), intercept = limit. The intercept error is inflated by sqrt(reduced chi^2) when
/// that exceeds 1 and combined with the gap to a quadratic fit. With stderrs available, a
/// residual above 5x the pooled stderr switches to last value +- last stderr.
Extrapolation extrapolate(const std::vector<double>& h, const std::vector<double>& values,
                          const std::vector<double>& std_errors = {});

enum class Verdict { Pass, Fail, Inconclusive };
std::string to_string(Verdict verdict);
/// 0 pass, 1 fail, 2 inconclusive.
int exit_code(Verdict verdict);

struct ParameterRow {
  double parameter = 0.0;
  double distance = 0.0;
  EnergyEstimate primary;
  std::optional<EnergyEstimate> monte_carlo;
  std::optional<EnergyEstimate> grid;
};

struct EnvironmentStamp {
  std::uint64_t seed = 0;
  std::size_t pairs = 0;
  std::size_t shell_samples = 0;
  int shards = 0;
  int strata = 0;
  std::string version;
  std::string compiler;
};

struct ConvergenceReport {
  std::string name;
  std::string space;
  std::string family;
  std::string function;
  double p = 0.0;
  std::vector<ParameterRow> rows;
  Extrapolation extrapolation;
  double predicted = 0.0;
  double predicted_uncertainty = 0.0;
  double theta_reference = 0.0;
  double relative_deviation = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::Fail;
  ValidationReport validation;
  std::vector<std::string> warnings;
  EnvironmentStamp environment;
};

/// Validates, sweeps the parameter grid, extrapolates and compares with predicted_limit.
/// Hard validator failures (non-monotone kernel, dimension mismatch) raise ConfigError; the
/// remaining checks are recorded as warnings.
ConvergenceReport run_experiment(const ExperimentConfig& config);

/// Header `parameter,energy,stderr,method,predicted,theta_reference`, one row per parameter,
/// 17 significant digits in positional notation. Throws std::runtime_error naming the path.
void emit_csv(const ConvergenceReport& report, const std::string& path);
void emit_json(const ConvergenceReport& report, const std::string& path);
void emit_text(const ConvergenceReport& report, const std::string& path);
std::string report_json(const ConvergenceReport& report);
std::string report_text(const ConvergenceReport& report);

/// Writes `<out_dir>/<name>.<format>` and `<out_dir>/<name>.txt`; returns the data file path.
std::string write_outputs(const ConvergenceReport& report, const ExperimentConfig& config);

/// Positional decimal with 17 significant digits (no exponent).
std::string format_decimal(double value);

}  // namespace bbm

#endif  // BBM_RUNNER_HPP
