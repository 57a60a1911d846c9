// dmtrack: decentralized mirror-descent target tracking, driven from the
// command line. Subcommands: run, sweep, check, validate, trajectory.
// Exit codes: 0 success, 2 usage/config error, 3 bound-violation verdict.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dmtrack/artifacts.hpp"
#include "dmtrack/config.hpp"
#include "dmtrack/csv.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitViolation = 3;

struct CommonOptions {
  std::optional<std::string> config_path;
  std::optional<std::string> preset;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& options) {
  cmd->add_option("--config", options.config_path,
                  "Config file (key = value lines)");
  cmd->add_option("--preset", options.preset,
                  "Preset name: ncv-grid25, static-quadratic, "
                  "complete-graph-centralized, custom");
  cmd->add_option("--set", options.overrides,
                  "Override a config key, e.g. --set sigma_nu2=0.25")
      ->take_all();
  cmd->add_option("--seed", options.seed, "Master seed (overrides config)");
  cmd->add_option("--threads", options.threads,
                  "Within-round worker threads");
}

dmtrack::ExperimentSpec resolve(const CommonOptions& options) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const std::string& entry : options.overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw dmtrack::ConfigError("--set expects key=value, got '" + entry +
                                 "'");
    }
    overrides.emplace_back(entry.substr(0, eq), entry.substr(eq + 1));
  }
  std::optional<std::filesystem::path> config_file;
  if (options.config_path) {
    config_file = *options.config_path;
    if (!std::filesystem::exists(*config_file)) {
      throw dmtrack::ConfigError("config file '" + *options.config_path +
                                 "' does not exist");
    }
  }
  dmtrack::ExperimentSpec spec =
      dmtrack::resolve_spec(config_file, options.preset, overrides);
  if (options.seed) spec.seed = *options.seed;
  if (options.threads) spec.threads = *options.threads;
  return spec;
}

int run_command(const CommonOptions& options, const std::string& out_dir) {
  const dmtrack::ExperimentSpec spec = resolve(options);
  const dmtrack::RunRecord record =
      dmtrack::run_experiment_and_write(spec, out_dir);
  double cum = 0.0;
  for (int t = 0; t < record.rounds; ++t) {
    cum += record.mean_loss[t] - record.comparator_loss[t];
  }
  std::printf("run complete: T=%d n=%d seed=%llu sigma2=%.6g\n",
              record.rounds, record.agents,
              static_cast<unsigned long long>(record.seed), record.sigma2);
  std::printf("cumulative regret %.10g (normalized %.10g), %.2fs\n", cum,
              cum / record.rounds, record.wall_seconds);
  std::printf("artifacts written to %s\n", out_dir.c_str());
  return kExitOk;
}

int sweep_command(const CommonOptions& options, const std::string& out_dir,
                  const std::string& parameter,
                  const std::vector<double>& values, int seeds, int stride,
                  int jobs) {
  const dmtrack::ExperimentSpec spec = resolve(options);
  dmtrack::SweepSpec sweep;
  sweep.parameter = parameter;
  sweep.values = values;
  sweep.seeds_per_value = seeds;
  const auto summaries =
      dmtrack::run_sweep(spec, sweep, out_dir, stride, jobs);
  for (const auto& s : summaries) {
    std::printf("%s=%-10g seed=%llu terminal_norm_regret=%.10g\n",
                parameter.c_str(), s.value,
                static_cast<unsigned long long>(s.seed),
                s.terminal_normalized_regret);
  }
  std::printf("sweep artifacts written to %s\n", out_dir.c_str());
  return kExitOk;
}

int check_command(const std::string& in_dir, double delta) {
  const dmtrack::DirectoryCheckOutcome outcome =
      dmtrack::check_directory(in_dir, delta);
  for (const auto& run : outcome.runs) {
    std::printf("%s: %s (measured %.6g, bound %s)\n",
                run.dir.string().c_str(), run.label.c_str(),
                run.measured_regret,
                run.bound_available ? dmtrack::format_g17(run.bound_total).c_str()
                                    : "n/a");
    if (!run.within_hypotheses) {
      std::printf("  warning: outside bound hypotheses (compact set and "
                  "non-expansive dynamics required)\n");
    }
    if (run.disagreement_violations > 0) {
      std::printf("  disagreement violations: %ld%s\n",
                  run.disagreement_violations,
                  run.disagreement_in_hypotheses ? "" : " (outside hypotheses)");
    }
  }
  std::printf("%s\n", outcome.summary.c_str());
  return outcome.ok ? kExitOk : kExitViolation;
}

int validate_command(const CommonOptions& options) {
  const dmtrack::ExperimentSpec spec = resolve(options);
  const dmtrack::MaterializedExperiment experiment =
      dmtrack::materialize(spec);
  const dmtrack::ValidationReport report = dmtrack::validate_weights(
      experiment.run.weights.matrix(), experiment.run.graph);
  std::printf("graph: n=%d edges=%zu sigma2=%.12g\n", experiment.run.graph.n,
              experiment.run.graph.edges.size(),
              experiment.run.weights.sigma2());
  std::fputs(report.to_string().c_str(), stdout);
  return report.all_pass() ? kExitOk : kExitConfig;
}

int trajectory_command(const CommonOptions& options,
                       const std::string& out_dir) {
  const dmtrack::ExperimentSpec spec = resolve(options);
  const dmtrack::MaterializedExperiment experiment =
      dmtrack::materialize(spec);
  dmtrack::Vector start =
      experiment.run.target_start.size() == experiment.run.map.dimension
          ? experiment.run.target_start
          : dmtrack::Vector::Zero(experiment.run.map.dimension);
  const dmtrack::TargetTrajectory trajectory =
      experiment.run.scripted_trajectory
          ? *experiment.run.scripted_trajectory
          : dmtrack::generate_trajectory(experiment.run.dynamics, start,
                                         experiment.run.noise,
                                         experiment.run.rounds,
                                         experiment.run.seed);
  std::filesystem::create_directories(out_dir);
  dmtrack::write_trajectory_csv(std::filesystem::path(out_dir) /
                                    "trajectory.csv",
                                trajectory);
  std::printf("trajectory written to %s (T=%d, path length %.6g)\n",
              out_dir.c_str(), trajectory.rounds(),
              dmtrack::path_length(trajectory, dmtrack::Norm::kL2));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized online mirror descent for multi-agent tracking"};
  app.require_subcommand(1);

  CommonOptions run_options;
  std::string run_out = "out";
  CLI::App* cmd_run = app.add_subcommand("run", "Run one experiment");
  add_common(cmd_run, run_options);
  cmd_run->add_option("--out", run_out, "Output directory");

  CommonOptions sweep_options;
  std::string sweep_out = "out";
  std::string sweep_param = "sigma_nu2";
  std::vector<double> sweep_values;
  int sweep_seeds = 1;
  int sweep_stride = 10;
  int sweep_jobs = 1;
  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "Run a parameter sweep");
  add_common(cmd_sweep, sweep_options);
  cmd_sweep->add_option("--out", sweep_out, "Output directory");
  cmd_sweep->add_option("--param", sweep_param, "Config key to sweep");
  cmd_sweep->add_option("--values", sweep_values, "Sweep values")
      ->delimiter(',');
  cmd_sweep->add_option("--seeds-per-value", sweep_seeds,
                        "Seeds per sweep value");
  cmd_sweep->add_option("--stride", sweep_stride,
                        "Row thinning stride for sweep.csv");
  cmd_sweep->add_option("--jobs", sweep_jobs, "Concurrent runs");

  std::string check_in;
  double check_delta = 0.1;
  CLI::App* cmd_check = app.add_subcommand(
      "check", "Verify recorded runs against the regret and disagreement "
               "bounds");
  cmd_check->add_option("--in", check_in, "Run or sweep directory")
      ->required();
  cmd_check->add_option("--delta", check_delta,
                        "Bound confidence parameter in (0, 1)");

  CommonOptions validate_options;
  CLI::App* cmd_validate = app.add_subcommand(
      "validate", "Build and validate the network weights only");
  add_common(cmd_validate, validate_options);

  CommonOptions trajectory_options;
  std::string trajectory_out = "out";
  CLI::App* cmd_trajectory = app.add_subcommand(
      "trajectory", "Generate and dump the target trajectory only");
  add_common(cmd_trajectory, trajectory_options);
  cmd_trajectory->add_option("--out", trajectory_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (cmd_run->parsed()) return run_command(run_options, run_out);
    if (cmd_sweep->parsed()) {
      return sweep_command(sweep_options, sweep_out, sweep_param, sweep_values,
                           sweep_seeds, sweep_stride, sweep_jobs);
    }
    if (cmd_check->parsed()) return check_command(check_in, check_delta);
    if (cmd_validate->parsed()) return validate_command(validate_options);
    if (cmd_trajectory->parsed()) {
      return trajectory_command(trajectory_options, trajectory_out);
    }
  } catch (const dmtrack::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dmtrack::ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
