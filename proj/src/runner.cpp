#include "bbm/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include <json.hpp>

#include "bbm/stats.hpp"

#ifndef BBM_VERSION
#define BBM_VERSION "unknown"
#endif

namespace bbm {

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!node.IsMap()) config_error(where, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) config_error(where, "unknown key '" + key + "'");
  }
}

template <typename T>
T read(const YAML::Node& node, const std::string& key, const std::string& where) {
  try {
    return node[key].as<T>();
  } catch (const YAML::Exception& e) {
    config_error(where + "." + key, "cannot read value (" + std::string(e.what()) + ")");
  }
}

template <typename T>
void read_optional(const YAML::Node& node, const std::string& key, const std::string& where,
                   T& target) {
  if (node[key]) target = read<T>(node, key, where);
}

std::vector<double> read_list(const YAML::Node& node, const std::string& key,
                              const std::string& where) {
  const YAML::Node list = node[key];
  if (!list) config_error(where, "missing '" + key + "'");
  if (list.IsScalar()) return {read<double>(node, key, where)};
  if (!list.IsSequence()) config_error(where + "." + key, "expected a list of numbers");
  return read<std::vector<double>>(node, key, where);
}

SpaceConfig parse_space(const YAML::Node& n) {
  if (!n) config_error("space", "missing section");
  check_keys(n, {"kind", "dim", "q", "weight", "pairing"}, "space");
  SpaceConfig s;
  if (!n["kind"]) config_error("space", "missing 'kind'");
  s.kind = read<std::string>(n, "kind", "space");
  if (s.kind == "heisenberg") {
    s.dim = 3;
    return s;
  }
  if (s.kind != "euclidean" && s.kind != "lq" && s.kind != "weighted") {
    config_error("space.kind", "expected euclidean, lq, weighted or heisenberg, got '" + s.kind + "'");
  }
  if (!n["dim"]) config_error("space", "missing 'dim'");
  s.dim = read<int>(n, "dim", "space");
  if (s.dim < 1 || s.dim > 3) config_error("space.dim", "must be 1, 2 or 3");
  if (s.kind == "lq") {
    if (!n["q"]) config_error("space", "lq backend needs 'q'");
    const std::string text = read<std::string>(n, "q", "space");
    if (text == "inf" || text == ".inf" || text == "infinity") {
      s.q = std::numeric_limits<double>::infinity();
    } else {
      s.q = read<double>(n, "q", "space");
    }
    if (!(s.q >= 1.0)) config_error("space.q", "must be at least 1");
  }
  if (s.kind == "weighted") {
    if (const YAML::Node w = n["weight"]) {
      check_keys(w, {"base", "amplitude", "axis"}, "space.weight");
      read_optional(w, "base", "space.weight", s.weight_base);
      read_optional(w, "amplitude", "space.weight", s.weight_amplitude);
      read_optional(w, "axis", "space.weight", s.weight_axis);
    }
    if (!(s.weight_base - std::abs(s.weight_amplitude) > 0.0)) {
      config_error("space.weight", "base - |amplitude| must be positive");
    }
    if (s.weight_axis < 0 || s.weight_axis >= s.dim) config_error("space.weight.axis", "out of range");
    if (n["pairing"]) {
      const std::string pairing = read<std::string>(n, "pairing", "space");
      if (pairing == "asymmetric") {
        s.pairing = MeasurePairing::Asymmetric;
      } else if (pairing == "symmetric") {
        s.pairing = MeasurePairing::Symmetric;
      } else {
        config_error("space.pairing", "expected asymmetric or symmetric");
      }
    }
  }
  return s;
}

FamilyConfig parse_family(const YAML::Node& n) {
  if (!n) config_error("family", "missing section");
  check_keys(n, {"kind", "grid", "scale", "claimed_C0", "table"}, "family");
  FamilyConfig f;
  if (!n["kind"]) config_error("family", "missing 'kind'");
  try {
    f.kind = kernel_kind_from_string(read<std::string>(n, "kind", "family"));
  } catch (const InputError& e) {
    config_error("family.kind", e.what());
  }
  f.grid = read_list(n, "grid", "family");
  if (f.grid.size() < 3) config_error("family.grid", "needs at least 3 parameters to extrapolate");
  read_optional(n, "scale", "family", f.scale);
  if (n["claimed_C0"]) f.claimed_C0 = read<double>(n, "claimed_C0", "family");
  if (f.kind == KernelKind::UserRadial) {
    const YAML::Node t = n["table"];
    if (!t) config_error("family", "user_radial needs 'table'");
    check_keys(t, {"radius", "value"}, "family.table");
    f.table.radius = read_list(t, "radius", "family.table");
    f.table.value = read_list(t, "value", "family.table");
    if (!f.claimed_C0) config_error("family", "user_radial needs 'claimed_C0'");
  }
  return f;
}

FunctionConfig parse_function(const YAML::Node& n) {
  if (!n) config_error("function", "missing section");
  check_keys(n, {"kind", "anchor", "radius", "direction", "amplitude"}, "function");
  FunctionConfig f;
  if (!n["kind"]) config_error("function", "missing 'kind'");
  try {
    f.kind = function_kind_from_string(read<std::string>(n, "kind", "function"));
  } catch (const InputError& e) {
    config_error("function.kind", e.what());
  }
  if (n["anchor"]) f.anchor = read_list(n, "anchor", "function");
  read_optional(n, "radius", "function", f.radius);
  if (n["direction"]) f.direction = read_list(n, "direction", "function");
  read_optional(n, "amplitude", "function", f.amplitude);
  if (f.kind == FunctionKind::LinearCutoff && f.direction.empty()) {
    config_error("function", "linear_cutoff needs 'direction'");
  }
  return f;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

// ---------------------------------------------------------------------------------------------

ExperimentConfig parse_config(const YAML::Node& root) {
  if (!root.IsMap()) throw ConfigError("configuration: expected a mapping at the top level");
  check_keys(root,
             {"name", "space", "family", "function", "p", "seed", "budgets", "methods",
              "tolerance", "validation", "negative_control", "output"},
             "configuration");
  ExperimentConfig c;
  read_optional(root, "name", "configuration", c.name);
  c.space = parse_space(root["space"]);
  c.family = parse_family(root["family"]);
  c.function = parse_function(root["function"]);
  read_optional(root, "p", "configuration", c.p);
  if (!(c.p >= 1.0)) config_error("p", "must be at least 1");
  if (root["seed"]) c.seed = read<std::uint64_t>(root, "seed", "configuration");

  if (const YAML::Node b = root["budgets"]) {
    check_keys(b,
               {"pairs", "shell_samples", "grid_resolution_1d", "grid_resolution_2d", "grid_angles",
                "grid_rel_tol", "limit_resolution", "shards", "strata", "threads"},
               "budgets");
    auto& B = c.budgets;
    read_optional(b, "pairs", "budgets", B.pairs);
    read_optional(b, "shell_samples", "budgets", B.shell_samples);
    read_optional(b, "grid_resolution_1d", "budgets", B.grid_resolution_1d);
    read_optional(b, "grid_resolution_2d", "budgets", B.grid_resolution_2d);
    read_optional(b, "grid_angles", "budgets", B.grid_angles);
    read_optional(b, "grid_rel_tol", "budgets", B.grid_rel_tol);
    read_optional(b, "limit_resolution", "budgets", B.limit_resolution);
    read_optional(b, "shards", "budgets", B.shards);
    read_optional(b, "strata", "budgets", B.strata);
    read_optional(b, "threads", "budgets", B.threads);
    if (B.pairs < 10000) config_error("budgets.pairs", "must be at least 10000");
    if (B.shards < 1 || B.strata < 1) config_error("budgets", "shards and strata must be positive");
  }
  if (root["methods"]) {
    const std::string m = read<std::string>(root, "methods", "configuration");
    if (m == "auto") {
      c.methods = EnergyMethods::Auto;
    } else if (m == "mc" || m == "monte_carlo") {
      c.methods = EnergyMethods::MonteCarlo;
    } else if (m == "grid") {
      c.methods = EnergyMethods::Grid;
    } else {
      config_error("methods", "expected auto, mc or grid");
    }
  }
  if (const YAML::Node t = root["tolerance"]) {
    check_keys(t, {"relative", "inconclusive_stderr"}, "tolerance");
    read_optional(t, "relative", "tolerance", c.tolerance);
    read_optional(t, "inconclusive_stderr", "tolerance", c.inconclusive_stderr);
    if (!(c.tolerance >= 0.0)) config_error("tolerance.relative", "must be non-negative");
  }
  if (const YAML::Node v = root["validation"]) {
    check_keys(v, {"delta", "robustness_delta", "normalization_rel", "tail_rel", "budget"},
               "validation");
    read_optional(v, "delta", "validation", c.validation.delta);
    read_optional(v, "robustness_delta", "validation", c.validation.robustness_delta);
    read_optional(v, "normalization_rel", "validation", c.validation.normalization_rel);
    read_optional(v, "tail_rel", "validation", c.validation.tail_rel);
    read_optional(v, "budget", "validation", c.validation.budget);
  }
  if (const YAML::Node nc = root["negative_control"]) {
    check_keys(nc, {"claimed_C0_factor", "gradient_factor", "dimension_factor"},
               "negative_control");
    read_optional(nc, "claimed_C0_factor", "negative_control", c.negative_control.claimed_C0_factor);
    read_optional(nc, "gradient_factor", "negative_control", c.negative_control.gradient_factor);
    read_optional(nc, "dimension_factor", "negative_control", c.negative_control.dimension_factor);
  }
  if (const YAML::Node o = root["output"]) {
    check_keys(o, {"dir", "format"}, "output");
    read_optional(o, "dir", "output", c.out_dir);
    read_optional(o, "format", "output", c.format);
    if (c.format != "csv" && c.format != "json") config_error("output.format", "expected csv or json");
  }
  return c;
}

ExperimentConfig parse_config_string(const std::string& text) {
  try {
    return parse_config(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(YAML::Load(ss.str()));
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_budget_scale(ExperimentConfig& config, double factor) {
  if (!(factor > 0.0)) throw ConfigError("budget scale must be positive");
  auto scale = [&](std::size_t n, std::size_t floor) {
    return std::max(floor, static_cast<std::size_t>(std::llround(static_cast<double>(n) * factor)));
  };
  config.budgets.pairs = scale(config.budgets.pairs, 10000);
  config.budgets.shell_samples = scale(config.budgets.shell_samples, 1000);
}

Space build_space(const ExperimentConfig& config) {
  const SpaceConfig& s = config.space;
  Space space = [&] {
    if (s.kind == "euclidean") return Space::euclidean(s.dim);
    if (s.kind == "lq") return Space::lq_normed(s.dim, s.q);
    if (s.kind == "heisenberg") return Space::heisenberg();
    const double base = s.weight_base, amp = s.weight_amplitude;
    const int axis = s.weight_axis;
    WeightSpec w;
    w.theta = [=](const PointRef& x) { return base + amp * std::sin(x(axis)); };
    w.theta_min = base - std::abs(amp);
    w.theta_max = base + std::abs(amp);
    std::ostringstream os;
    os << base << " + " << amp << " sin(x" << axis + 1 << ")";
    w.description = os.str();
    return Space::weighted(s.dim, std::move(w), s.pairing);
  }();
  const double factor = config.negative_control.dimension_factor;
  if (factor != 1.0) {
    if (!(factor > 0.0)) throw ConfigError("negative_control.dimension_factor must be positive");
    space.override_homogeneous_dim(space.homogeneous_dim() * factor);
  }
  return space;
}

MollifierFamily build_family(const ExperimentConfig& config, const Space& space) {
  const FamilyConfig& f = config.family;
  const double N = space.homogeneous_dim();
  try {
    MollifierFamily family = [&] {
      switch (f.kind) {
        case KernelKind::Indicator: return MollifierFamily::indicator(N, config.p, f.grid);
        case KernelKind::Gagliardo: return MollifierFamily::gagliardo(N, config.p, f.grid);
        case KernelKind::GaussianShell:
          return MollifierFamily::gaussian_shell(N, config.p, f.grid);
        case KernelKind::UserRadial:
          return MollifierFamily::user_radial(N, config.p, f.grid, f.table, *f.claimed_C0);
      }
      throw ConfigError("family.kind: unsupported");
    }();
    if (f.scale != 1.0) family = family.scaled(f.scale);
    if (f.claimed_C0 && f.kind != KernelKind::UserRadial) {
      family = family.with_claimed_C0(*f.claimed_C0);
    }
    const double c0_factor = config.negative_control.claimed_C0_factor;
    if (c0_factor != 1.0) family = family.with_claimed_C0(family.claimed_C0() * c0_factor);
    return family;
  } catch (const InputError& e) {
    throw ConfigError(std::string("family: ") + e.what());
  }
}

TestFunction build_function(const ExperimentConfig& config) {
  const FunctionConfig& c = config.function;
  const int dim = config.space.dim;
  Point anchor = c.anchor.empty() ? Point::Zero(dim) : to_vector(c.anchor);
  if (anchor.size() != dim) throw ConfigError("function.anchor: expected " + std::to_string(dim) + " coordinates");
  try {
    TestFunction f = [&] {
      switch (c.kind) {
        case FunctionKind::Hat1D: return TestFunction::hat1d(anchor(0));
        case FunctionKind::RadialBump: return TestFunction::radial_bump(anchor, c.radius);
        case FunctionKind::LinearCutoff:
          return TestFunction::linear_cutoff(anchor, c.radius, to_vector(c.direction));
        case FunctionKind::HeisenbergPoly: return TestFunction::heisenberg_poly(c.radius, anchor);
      }
      throw ConfigError("function.kind: unsupported");
    }();
    if (c.amplitude != 1.0) f = f.scaled(c.amplitude);
    const double g = config.negative_control.gradient_factor;
    if (g != 1.0) f = f.with_gradient_scale(g);
    return f;
  } catch (const InputError& e) {
    throw ConfigError(std::string("function: ") + e.what());
  }
}

// ---------------------------------------------------------------------------------------------

Extrapolation extrapolate(const std::vector<double>& h, const std::vector<double>& values,
                          const std::vector<double>& std_errors) {
  const std::size_t m = h.size();
  if (m < 3) throw InputError("extrapolate: need at least 3 points");
  if (values.size() != m || (!std_errors.empty() && std_errors.size() != m)) {
    throw InputError("extrapolate: input lengths differ");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(h[i] > 0.0) || (i > 0 && !(h[i] < h[i - 1]))) {
      throw InputError("extrapolate: h must be positive and strictly decreasing");
    }
  }
  const bool have_errors = !std_errors.empty() &&
                           std::all_of(std_errors.begin(), std_errors.end(),
                                       [](double s) { return s > 0.0; });
  const std::vector<double> sigma = have_errors ? std_errors : std::vector<double>(m, 0.0);
  const LinearFit fit = weighted_linear_fit(h, values, sigma);

  Extrapolation out;
  out.limit = fit.intercept;
  out.slope = fit.slope;
  out.reduced_chi2 = fit.dof > 0 ? fit.chi2 / fit.dof : 0.0;

  if (have_errors) {
    double pooled = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      pooled += sigma[i] * sigma[i];
      worst = std::max(worst, std::abs(values[i] - (fit.intercept + fit.slope * h[i])));
    }
    pooled = std::sqrt(pooled / static_cast<double>(m));
    if (worst > 5.0 * pooled) {
      out.fallback = true;
      out.limit = values.back();
      out.uncertainty = sigma.back();
      return out;
    }
  }
  const double inflation = have_errors ? std::max(1.0, std::sqrt(out.reduced_chi2)) : 1.0;
  const double gap = quadratic_intercept(h, values, sigma) - fit.intercept;
  out.uncertainty = std::hypot(inflation * fit.intercept_error, gap);
  return out;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "fail";
}

int exit_code(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return 0;
    case Verdict::Fail: return 1;
    case Verdict::Inconclusive: return 2;
  }
  return 1;
}

ConvergenceReport run_experiment(const ExperimentConfig& config) {
  if (!config.seed) throw ConfigError("seed: missing (set it in the file or pass --seed)");
  const std::uint64_t seed = *config.seed;
  const Space space = build_space(config);
  const MollifierFamily family = build_family(config, space);
  const TestFunction f = build_function(config);
  try {
    check_compatible(space, f);
  } catch (const InputError& e) {
    throw ConfigError(std::string("function does not fit the space: ") + e.what());
  }

  ConvergenceReport rep;
  rep.name = config.name;
  rep.space = space.description();
  rep.family = to_string(family.kind());
  rep.function = f.description();
  rep.p = config.p;
  rep.tolerance = config.tolerance;

  try {
    rep.validation = validate_assumptions(family, space, config.validation);
  } catch (const InputError& e) {
    throw ConfigError(std::string("validator: ") + e.what());
  }
  if (!rep.validation.monotone) {
    throw ConfigError("validator: kernel profile is not non-increasing");
  }
  for (const std::string& msg : rep.validation.messages) rep.warnings.push_back(msg);
  if (!rep.validation.passed()) {
    rep.warnings.push_back("assumption validator reported failures; proceeding");
  }
  rep.warnings.push_back(
      "the default 5% tolerance is an engineering choice: no convergence rate in the parameter "
      "is known");

  const int dim = space.topological_dim();
  const bool grid_possible = dim <= 2 && space.kind() != SpaceKind::HeisenbergKoranyi;
  if (config.methods == EnergyMethods::Grid && !grid_possible) {
    throw ConfigError("methods: the grid oracle covers 1D and 2D non-Heisenberg backends only");
  }
  const bool run_grid = grid_possible && config.methods != EnergyMethods::MonteCarlo;
  const bool run_mc = config.methods != EnergyMethods::Grid;

  McOptions mc;
  mc.shards = config.budgets.shards;
  mc.strata = config.budgets.strata;
  mc.threads = config.budgets.threads;
  GridOptions go;
  go.resolution = dim == 1 ? config.budgets.grid_resolution_1d : config.budgets.grid_resolution_2d;
  go.angles = config.budgets.grid_angles;
  go.rel_tol = config.budgets.grid_rel_tol;

  std::vector<double> h, values, errors;
  const auto& grid = family.param_grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ParameterRow row;
    row.parameter = grid[i];
    row.distance = family.distance_to_limit(grid[i]);
    if (run_mc) {
      row.monte_carlo = energy_mc(space, f, family, grid[i], config.p, config.budgets.pairs,
                                  splitmix64(seed + 0x9E37 * (i + 1)), mc);
    }
    if (run_grid) row.grid = energy_grid(space, f, family, grid[i], config.p, go);
    row.primary = row.grid ? *row.grid : *row.monte_carlo;
    h.push_back(row.distance);
    values.push_back(row.primary.value);
    errors.push_back(row.grid ? row.grid->grid_uncertainty : row.monte_carlo->std_error);
    rep.rows.push_back(row);
  }
  rep.extrapolation = extrapolate(h, values, errors);
  if (rep.extrapolation.fallback) {
    rep.warnings.push_back("linear model rejected by residuals; using the last value");
  }

  LimitBudgets lb;
  lb.grid_resolution = config.budgets.limit_resolution;
  lb.shell_samples = config.budgets.shell_samples;
  const LimitValue pred = predicted_limit(space, f, family, config.p, lb, splitmix64(seed ^ 0x51));
  rep.predicted = pred.value;
  rep.predicted_uncertainty = pred.uncertainty;
  rep.theta_reference = theta_reference(space, f.anchor());

  const double diff = std::abs(rep.extrapolation.limit - rep.predicted);
  rep.relative_deviation = rep.predicted != 0.0 ? diff / std::abs(rep.predicted) : diff;
  const double combined = std::hypot(rep.extrapolation.uncertainty, rep.predicted_uncertainty);
  rep.verdict = diff <= config.tolerance * std::abs(rep.predicted) + combined ? Verdict::Pass
                                                                               : Verdict::Fail;
  if (const auto& last = rep.rows.back().monte_carlo;
      last && last->std_error > config.inconclusive_stderr * std::abs(last->value)) {
    rep.verdict = Verdict::Inconclusive;
    rep.warnings.push_back("Monte-Carlo stderr at the final parameter exceeds the threshold");
  }

  rep.environment.seed = seed;
  rep.environment.pairs = config.budgets.pairs;
  rep.environment.shell_samples = config.budgets.shell_samples;
  rep.environment.shards = config.budgets.shards;
  rep.environment.strata = config.budgets.strata;
  rep.environment.version = BBM_VERSION;
  rep.environment.compiler = __VERSION__;
  return rep;
}

// ---------------------------------------------------------------------------------------------

std::string format_decimal(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  const int exponent = static_cast<int>(std::floor(std::log10(std::abs(value))));
  const int decimals = std::max(0, 16 - exponent);
  std::vector<char> buf(static_cast<std::size_t>(decimals) + 400);
  std::snprintf(buf.data(), buf.size(), "%.*f", decimals, value);
  return buf.data();
}

namespace {

double row_error(const EnergyEstimate& e) {
  return e.method == EnergyMethod::Grid ? e.grid_uncertainty : e.std_error;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

nlohmann::ordered_json estimate_json(const EnergyEstimate& e) {
  nlohmann::ordered_json j;
  j["method"] = to_string(e.method);
  j["value"] = e.value;
  j["stderr"] = e.std_error;
  j["grid_uncertainty"] = e.grid_uncertainty;
  j["samples"] = e.samples;
  return j;
}

}  // namespace

void emit_csv(const ConvergenceReport& report, const std::string& path) {
  std::string text = "parameter,energy,stderr,method,predicted,theta_reference\n";
  for (const ParameterRow& row : report.rows) {
    text += format_decimal(row.parameter) + "," + format_decimal(row.primary.value) + "," +
            format_decimal(row_error(row.primary)) + "," + to_string(row.primary.method) + "," +
            format_decimal(report.predicted) + "," + format_decimal(report.theta_reference) + "\n";
  }
  write_file(path, text);
}

std::string report_json(const ConvergenceReport& report) {
  nlohmann::ordered_json j;
  j["name"] = report.name;
  j["space"] = report.space;
  j["family"] = report.family;
  j["function"] = report.function;
  j["p"] = report.p;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const ParameterRow& row : report.rows) {
    nlohmann::ordered_json r;
    r["parameter"] = row.parameter;
    r["distance_to_limit"] = row.distance;
    r["energy"] = row.primary.value;
    r["stderr"] = row_error(row.primary);
    r["method"] = to_string(row.primary.method);
    if (row.monte_carlo) r["monte_carlo"] = estimate_json(*row.monte_carlo);
    if (row.grid) r["grid"] = estimate_json(*row.grid);
    rows.push_back(r);
  }
  j["rows"] = rows;
  j["extrapolated"] = {{"limit", report.extrapolation.limit},
                       {"uncertainty", report.extrapolation.uncertainty},
                       {"slope", report.extrapolation.slope},
                       {"reduced_chi2", report.extrapolation.reduced_chi2},
                       {"fallback", report.extrapolation.fallback}};
  j["predicted"] = {{"value", report.predicted}, {"uncertainty", report.predicted_uncertainty}};
  j["theta_reference"] = report.theta_reference;
  j["relative_deviation"] = report.relative_deviation;
  j["tolerance"] = report.tolerance;
  j["verdict"] = to_string(report.verdict);
  const ValidationReport& v = report.validation;
  j["validation"] = {{"passed", v.passed()},
                     {"uniform_bound", v.uniform_bound},
                     {"monotone", v.monotone},
                     {"normalization", v.normalization},
                     {"tail", v.tail},
                     {"robustness_marginal", v.robustness_marginal},
                     {"rescale_flag", v.rescale_flag},
                     {"c1", v.c1},
                     {"normalization_value", v.normalization_value},
                     {"tail_value", v.tail_value}};
  j["warnings"] = report.warnings;
  j["environment"] = {{"seed", report.environment.seed},
                      {"pairs", report.environment.pairs},
                      {"shell_samples", report.environment.shell_samples},
                      {"shards", report.environment.shards},
                      {"strata", report.environment.strata},
                      {"version", report.environment.version},
                      {"compiler", report.environment.compiler}};
  return j.dump(2) + "\n";
}

void emit_json(const ConvergenceReport& report, const std::string& path) {
  write_file(path, report_json(report));
}

std::string report_text(const ConvergenceReport& report) {
  std::ostringstream os;
  os << "experiment   " << report.name << "\n"
     << "space        " << report.space << "\n"
     << "family       " << report.family << "\n"
     << "function     " << report.function << "\n"
     << "p            " << format_decimal(report.p) << "\n\n"
     << "parameter, distance, energy, error, method\n";
  for (const ParameterRow& row : report.rows) {
    os << "  " << format_decimal(row.parameter) << ", " << format_decimal(row.distance) << ", "
       << format_decimal(row.primary.value) << ", " << format_decimal(row_error(row.primary))
       << ", " << to_string(row.primary.method) << "\n";
    if (row.grid && row.monte_carlo) {
      os << "    monte_carlo cross-check " << format_decimal(row.monte_carlo->value) << " +- "
         << format_decimal(row.monte_carlo->std_error) << "\n";
    }
  }
  os << "\nextrapolated " << format_decimal(report.extrapolation.limit) << " +- "
     << format_decimal(report.extrapolation.uncertainty)
     << (report.extrapolation.fallback ? " (last value)" : " (linear fit)") << "\n"
     << "predicted    " << format_decimal(report.predicted) << " +- "
     << format_decimal(report.predicted_uncertainty) << "\n"
     << "theta        " << format_decimal(report.theta_reference) << "\n"
     << "deviation    " << format_decimal(report.relative_deviation) << " (tolerance "
     << format_decimal(report.tolerance) << ")\n"
     << "verdict      " << to_string(report.verdict) << "\n";
  if (!report.warnings.empty()) {
    os << "\nwarnings\n";
    for (const std::string& w : report.warnings) os << "  - " << w << "\n";
  }
  os << "\nseed " << report.environment.seed << ", pairs " << report.environment.pairs
     << ", shell samples " << report.environment.shell_samples << ", shards "
     << report.environment.shards << ", version " << report.environment.version << "\n";
  return os.str();
}

void emit_text(const ConvergenceReport& report, const std::string& path) {
  write_file(path, report_text(report));
}

std::string write_outputs(const ConvergenceReport& report, const ExperimentConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + config.out_dir + ": " + ec.message());
  const std::filesystem::path base = std::filesystem::path(config.out_dir) / report.name;
  const std::string data = base.string() + "." + config.format;
  if (config.format == "json") {
    emit_json(report, data);
  } else {
    emit_csv(report, data);
  }
  emit_text(report, base.string() + ".txt");
  return data;
}

}  // namespace bbm
