// Command-line front end: validate, run, constants, sweep.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bbm/runner.hpp"

namespace {

constexpr int kConfigError = 3;
constexpr int kRuntimeError = 4;

struct Overrides {
  std::optional<std::uint64_t> seed;
  double budget_scale = 1.0;
  std::optional<std::string> out;
  std::optional<std::string> format;
};

bbm::ExperimentConfig prepared(const std::string& path, const Overrides& o) {
  bbm::ExperimentConfig c = bbm::load_config(path);
  if (o.seed) c.seed = o.seed;
  if (o.budget_scale != 1.0) bbm::apply_budget_scale(c, o.budget_scale);
  if (o.out) c.out_dir = *o.out;
  if (o.format) c.format = *o.format;
  return c;
}

// Runs `body`, mapping exceptions to exit codes.
int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const bbm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const bbm::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

int cmd_validate(const std::string& path, const Overrides& o) {
  return guarded([&] {
    const bbm::ExperimentConfig c = prepared(path, o);
    const bbm::Space space = bbm::build_space(c);
    const bbm::MollifierFamily family = bbm::build_family(c, space);
    const bbm::TestFunction f = bbm::build_function(c);
    bbm::check_compatible(space, f);
    const bbm::ValidationReport v = bbm::validate_assumptions(family, space, c.validation);
    std::cout << "space        " << space.description() << "\n"
              << "family       " << bbm::to_string(family.kind()) << " (claimed C0 "
              << family.claimed_C0() << ")\n"
              << "function     " << f.description() << "\n"
              << "uniform L1   " << (v.uniform_bound ? "ok" : "FAILED") << "  c1 = " << v.c1 << "\n"
              << "monotone     " << (v.monotone ? "ok" : "FAILED") << "\n"
              << "normalization " << (v.normalization ? "ok" : "FAILED") << "  "
              << v.normalization_value << "\n"
              << "tail         " << (v.tail ? "ok" : "FAILED") << "  " << v.tail_value << "\n";
    for (const std::string& m : v.messages) std::cout << "  - " << m << "\n";
    if (!v.monotone) return kConfigError;
    return v.passed() ? 0 : 1;
  });
}

int cmd_run(const std::string& path, const Overrides& o) {
  return guarded([&] {
    const bbm::ExperimentConfig c = prepared(path, o);
    const bbm::ConvergenceReport rep = bbm::run_experiment(c);
    const std::string data = bbm::write_outputs(rep, c);
    std::cout << bbm::report_text(rep) << "written " << data << "\n";
    return bbm::exit_code(rep.verdict);
  });
}

int cmd_sweep(const std::string& dir, const Overrides& o) {
  std::vector<std::string> paths;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".yaml" || ext == ".yml")) {
      paths.push_back(entry.path().string());
    }
  }
  if (ec) {
    std::cerr << "config error: cannot list " << dir << ": " << ec.message() << "\n";
    return kConfigError;
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    std::cerr << "config error: no .yaml files in " << dir << "\n";
    return kConfigError;
  }

  struct Outcome {
    int code = 0;
    std::string line;
  };
  auto one = [&](const std::string& path) {
    Outcome out;
    std::string summary;
    out.code = guarded([&] {
      const bbm::ExperimentConfig c = prepared(path, o);
      const bbm::ConvergenceReport rep = bbm::run_experiment(c);
      bbm::write_outputs(rep, c);
      summary = rep.name + ": " + bbm::to_string(rep.verdict) + " (extrapolated " +
                bbm::format_decimal(rep.extrapolation.limit) + ", predicted " +
                bbm::format_decimal(rep.predicted) + ")";
      return bbm::exit_code(rep.verdict);
    });
    out.line = path + "  " + (summary.empty() ? "error, exit " + std::to_string(out.code) : summary);
    return out;
  };

  // Experiments run concurrently; results are reported in file order.
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), paths.size()));
  std::vector<Outcome> outcomes(paths.size());
  for (std::size_t start = 0; start < paths.size(); start += workers) {
    std::vector<std::future<Outcome>> batch;
    for (std::size_t i = start; i < std::min(paths.size(), start + workers); ++i) {
      batch.push_back(std::async(std::launch::async, one, paths[i]));
    }
    for (std::size_t k = 0; k < batch.size(); ++k) outcomes[start + k] = batch[k].get();
  }
  int worst = 0;
  for (const Outcome& out : outcomes) {
    std::cout << out.line << "\n";
    worst = std::max(worst, out.code);
  }
  return worst;
}

int cmd_constants(const std::vector<double>& ps, std::size_t budget, std::uint64_t seed) {
  return guarded([&] {
    std::printf("K_{p,N}: closed form and shell Monte-Carlo (%zu samples)\n", budget);
    for (double p : ps) {
      for (int N = 1; N <= 3; ++N) {
        const bbm::Estimate k = bbm::k_constant_euclidean(p, N, budget, seed);
        std::printf("  p=%-4g N=%d  %.10f   %.6f +- %.6f\n", p, N, bbm::k_constant_closed_form(p, N),
                    k.value, k.std_error);
      }
    }
    std::printf("Minkowski content of the normalized unit sphere (eps 0.1 .. 0.0125)\n");
    const std::vector<double> eps = {0.1, 0.05, 0.025, 0.0125};
    const std::vector<bbm::Space> cones = {
        bbm::Space::euclidean(1), bbm::Space::euclidean(2), bbm::Space::euclidean(3),
        bbm::Space::lq_normed(2, INFINITY), bbm::Space::lq_normed(2, 1.0), bbm::Space::heisenberg()};
    for (const bbm::Space& s : cones) {
      const auto m = bbm::minkowski_content(bbm::ConeDescriptor::of(s), 1.0, eps, 4 * budget, seed);
      std::printf("  %-44s N=%g  %.6f +- %.6f\n", s.description().c_str(), s.homogeneous_dim(),
                  m.value, m.uncertainty);
    }
    std::printf("theta references (unit-ball volume of the cone)\n");
    for (const bbm::Space& s : cones) {
      std::printf("  %-44s %.10f\n", s.description().c_str(),
                  bbm::theta_reference(s, bbm::Point::Zero(s.topological_dim())));
    }
    return 0;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal energy convergence laboratory"};
  app.require_subcommand(1);

  Overrides o;
  std::string config;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Configuration file (directory for sweep)")->required();
    sub->add_option("--seed", o.seed, "Seed overriding the file");
    sub->add_option("--budget-scale", o.budget_scale, "Multiplier for Monte-Carlo budgets")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };

  CLI::App* validate = app.add_subcommand("validate", "Check kernel family and space only");
  add_common(validate);
  CLI::App* run = app.add_subcommand("run", "Run one experiment");
  add_common(run);
  CLI::App* sweep = app.add_subcommand("sweep", "Run every .yaml configuration in a directory");
  add_common(sweep);

  CLI::App* constants = app.add_subcommand("constants", "Print K_{p,N}, Minkowski contents, theta");
  std::vector<double> ps = {1.5, 2.0, 3.0};
  std::size_t budget = 400000;
  std::uint64_t seed = 1;
  constants->add_option("--p", ps, "Exponents");
  constants->add_option("--budget", budget, "Shell samples");
  constants->add_option("--seed", seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  if (*validate) return cmd_validate(config, o);
  if (*run) return cmd_run(config, o);
  if (*sweep) return cmd_sweep(config, o);
  if (*constants) return cmd_constants(ps, budget, seed);
  return kConfigError;
}
