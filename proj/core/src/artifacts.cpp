#include "dmtrack/artifacts.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dmtrack/csv.hpp"

namespace dmtrack {
namespace {

constexpr int kLipschitzBudget = 4096;

std::string bool_str(bool v) { return v ? "true" : "false"; }

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double manifest_double(const std::map<std::string, std::string>& manifest,
                       const std::string& key) {
  const auto it = manifest.find(key);
  if (it == manifest.end()) {
    throw ArtifactError("manifest is missing key '" + key + "'");
  }
  try {
    return parse_double(it->second);
  } catch (const std::exception&) {
    throw ArtifactError("manifest key '" + key + "' is not a number");
  }
}

std::string value_dir_name(const std::string& parameter, double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s-%g", parameter.c_str(), value);
  return buf;
}

}  // namespace

void write_run_artifacts(const std::filesystem::path& dir,
                         const ExperimentSpec& spec,
                         const std::optional<FeasibleSet>& constants_domain,
                         const RunRecord& record) {
  std::filesystem::create_directories(dir);
  const int rounds = record.rounds;
  const int d = record.dimension;

  // regret.csv
  {
    std::string content = "t,cum_regret,norm_regret\n";
    double cum = 0.0;
    for (int t = 1; t <= rounds; ++t) {
      cum += record.mean_loss[t - 1] - record.comparator_loss[t - 1];
      content += std::to_string(t) + "," + format_g17(cum) + "," +
                 format_g17(cum / t) + "\n";
    }
    atomic_write_file(dir / "regret.csv", content);
  }

  write_trajectory_csv(dir / "trajectory.csv", *record.trajectory);

  if (record.granularity == RecordGranularity::kFull) {
    std::string content = "t,agent";
    for (int k = 1; k <= d; ++k) content += ",x" + std::to_string(k);
    content += "\n";
    for (int t = 1; t <= rounds; ++t) {
      const Matrix& x = record.estimates[t - 1];
      for (int i = 0; i < record.agents; ++i) {
        content += std::to_string(t) + "," + std::to_string(i);
        for (int k = 0; k < d; ++k) content += "," + format_g17(x(k, i));
        content += "\n";
      }
    }
    atomic_write_file(dir / "estimates.csv", content);
  }

  // Honest constants for bound evaluation: the Lipschitz envelope combines a
  // sampled sup over the constants domain with the realized sup of applied
  // gradients; divergence constants come from that domain.
  const LossOracle oracle = record.make_oracle();
  double lipschitz_estimate = 0.0;
  std::optional<BregmanConstants> constants;
  if (constants_domain) {
    lipschitz_estimate = estimate_lipschitz(oracle, *constants_domain,
                                            kLipschitzBudget, record.seed);
    constants = constants_of(record.map, *constants_domain);
  }
  const double lipschitz =
      std::max(lipschitz_estimate, record.applied_gradient_norm_max);

  double cum_regret = 0.0;
  for (int t = 0; t < rounds; ++t) {
    cum_regret += record.mean_loss[t] - record.comparator_loss[t];
  }

  std::string m = "# run manifest\n";
  for (const auto& [key, value] : spec_to_keyvalues(spec)) {
    m += key + " = " + value + "\n";
  }
  m += "result.version = " + std::string(kVersion) + "\n";
  m += "result.agents = " + std::to_string(record.agents) + "\n";
  m += "result.dimension = " + std::to_string(d) + "\n";
  m += "result.granularity = " +
       std::string(record.granularity == RecordGranularity::kFull ? "full"
                                                                  : "summary") +
       "\n";
  m += "result.sigma2 = " + format_g17(record.sigma2) + "\n";
  m += "result.spectral_norm = " + format_g17(record.dynamics.spectral_norm) +
       "\n";
  m += "result.non_expansive = " + bool_str(record.dynamics.non_expansive) +
       "\n";
  m += "result.compact_set = " + bool_str(record.set.is_compact()) + "\n";
  m += "result.constants_domain = " +
       std::string(!constants_domain          ? "unavailable"
                   : record.set.is_compact()  ? "feasible-set"
                                              : "bound-box") +
       "\n";
  m += "result.lipschitz_estimate = " + format_g17(lipschitz_estimate) + "\n";
  m += "result.lipschitz_realized = " +
       format_g17(record.applied_gradient_norm_max) + "\n";
  m += "result.lipschitz = " + format_g17(lipschitz) + "\n";
  if (constants) {
    m += "result.rsq = " + format_g17(constants->rsq) + "\n";
    m += "result.divergence_lipschitz = " +
         format_g17(constants->divergence_lipschitz) + "\n";
  }
  m += "result.clip_threshold = " +
       (record.clip ? format_g17(*record.clip) : std::string("none")) + "\n";
  m += "result.clip_count = " + std::to_string(record.clip_count) + "\n";
  m += "result.path_length = " +
       format_g17(path_length(*record.trajectory,
                              record.map.natural_norm())) +
       "\n";
  m += "result.eta_first = " + format_g17(record.schedule.eta(1)) + "\n";
  m += "result.eta_final = " + format_g17(record.schedule.eta(rounds + 1)) +
       "\n";
  m += "result.regret_cumulative = " + format_g17(cum_regret) + "\n";
  m += "result.regret_normalized = " + format_g17(cum_regret / rounds) + "\n";
  m += "# wall_clock_s = " + format_g17(record.wall_seconds) + "\n";
  atomic_write_file(dir / "manifest.txt", m);
}

RunRecord run_experiment_and_write(const ExperimentSpec& spec,
                                   const std::filesystem::path& dir) {
  const MaterializedExperiment experiment = materialize(spec);
  RunRecord record = run(experiment.run);
  write_run_artifacts(dir, experiment.spec, experiment.constants_domain,
                      record);
  return record;
}

std::map<std::string, std::string> read_manifest(
    const std::filesystem::path& dir) {
  const auto path = dir / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw ArtifactError("missing manifest '" + path.string() + "'");
  std::map<std::string, std::string> manifest;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ArtifactError("malformed manifest line '" + line + "'");
    }
    manifest[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return manifest;
}

RunArtifacts read_run_artifacts(const std::filesystem::path& dir) {
  RunArtifacts out;
  out.manifest = read_manifest(dir);
  try {
    std::map<std::string, std::string> echo;
    for (const auto& [k, v] : out.manifest) {
      echo[k] = v;
    }
    out.spec = parse_spec_echo(echo);
  } catch (const std::exception& e) {
    throw ArtifactError(std::string("manifest does not parse as a config: ") +
                        e.what());
  }

  RunRecord& record = out.record;
  record.rounds = out.spec.rounds;
  record.agents = static_cast<int>(manifest_double(out.manifest,
                                                   "result.agents"));
  record.dimension = static_cast<int>(
      manifest_double(out.manifest, "result.dimension"));
  record.seed = out.spec.seed;
  record.sigma2 = manifest_double(out.manifest, "result.sigma2");
  record.applied_gradient_norm_max =
      manifest_double(out.manifest, "result.lipschitz_realized");
  record.loss_family = out.spec.loss == "quartic-sensor"
                           ? LossFamily::kQuarticSensor
                           : LossFamily::kQuadraticTracking;
  record.gradient_noise_amplitude = out.spec.grad_noise_amplitude;

  const auto clip_it = out.manifest.find("result.clip_threshold");
  if (clip_it != out.manifest.end() && clip_it->second != "none") {
    record.clip = manifest_double(out.manifest, "result.clip_threshold");
  }

  const int d = record.dimension;
  record.map = out.spec.map == "euclidean" ? euclidean_map(d)
                                           : negative_entropy_map(d);
  try {
    record.dynamics = out.spec.dynamics == "ncv"
                          ? ncv_dynamics(out.spec.epsilon)
                          : identity_dynamics(d);
    if (out.spec.set == "wholespace") {
      record.set = FeasibleSet::whole_space(d);
    } else {
      // Rebuild through the config path so box/ball/simplex parameters are
      // validated the same way as at run time.
      record.set = materialize(out.spec).run.set;
    }
    if (out.spec.schedule == "constant") {
      record.schedule = StepSizeSchedule::constant(out.spec.eta);
    } else if (out.spec.schedule == "inverse-sqrt") {
      record.schedule = StepSizeSchedule::inverse_sqrt(out.spec.eta_c);
    } else {
      record.schedule =
          StepSizeSchedule::static_optimal(record.sigma2, record.rounds);
    }
  } catch (const std::exception& e) {
    throw ArtifactError(std::string("cannot rebuild run pieces: ") + e.what());
  }

  try {
    record.trajectory = std::make_shared<TargetTrajectory>(
        read_trajectory_csv(dir / "trajectory.csv", record.dynamics));
  } catch (const std::exception& e) {
    throw ArtifactError(std::string("trajectory.csv: ") + e.what());
  }
  if (record.trajectory->rounds() != record.rounds) {
    throw ArtifactError("trajectory.csv horizon does not match the manifest");
  }

  // regret.csv
  try {
    const CsvTable table = read_csv(dir / "regret.csv");
    const int ct = table.column("t");
    const int cc = table.column("cum_regret");
    const int cn = table.column("norm_regret");
    if (ct < 0 || cc < 0 || cn < 0 ||
        static_cast<int>(table.rows.size()) != record.rounds) {
      throw std::runtime_error("unexpected schema or row count");
    }
    for (int t = 1; t <= record.rounds; ++t) {
      const auto& row = table.rows[t - 1];
      if (parse_double(row[ct]) != t) {
        throw std::runtime_error("round column is not contiguous");
      }
      out.regret_cumulative.push_back(parse_double(row[cc]));
      out.regret_normalized.push_back(parse_double(row[cn]));
    }
  } catch (const std::exception& e) {
    throw ArtifactError(std::string("regret.csv: ") + e.what());
  }

  // estimates.csv (optional)
  const auto estimates_path = dir / "estimates.csv";
  if (std::filesystem::exists(estimates_path)) {
    try {
      const CsvTable table = read_csv(estimates_path);
      if (static_cast<int>(table.header.size()) != 2 + d ||
          static_cast<int>(table.rows.size()) !=
              record.rounds * record.agents) {
        throw std::runtime_error("unexpected schema or row count");
      }
      record.granularity = RecordGranularity::kFull;
      record.estimates.assign(record.rounds,
                              Matrix::Zero(d, record.agents));
      std::size_t r = 0;
      for (int t = 1; t <= record.rounds; ++t) {
        for (int i = 0; i < record.agents; ++i, ++r) {
          const auto& row = table.rows[r];
          if (parse_double(row[0]) != t || parse_double(row[1]) != i) {
            throw std::runtime_error("rows are not in (t, agent) order");
          }
          for (int k = 0; k < d; ++k) {
            record.estimates[t - 1](k, i) = parse_double(row[2 + k]);
          }
        }
      }
    } catch (const std::exception& e) {
      throw ArtifactError(std::string("estimates.csv: ") + e.what());
    }
  } else {
    record.granularity = RecordGranularity::kSummary;
  }
  return out;
}

RunCheckResult check_run_directory(const std::filesystem::path& dir,
                                   double delta) {
  if (!(delta > 0.0) || delta >= 1.0) {
    throw ConfigError("delta must lie in (0, 1)");
  }
  const RunArtifacts artifacts = read_run_artifacts(dir);
  const RunRecord& record = artifacts.record;

  RunCheckResult result;
  result.dir = dir;
  result.measured_regret = artifacts.regret_cumulative.empty()
                               ? 0.0
                               : artifacts.regret_cumulative.back();

  // Internal consistency of regret.csv.
  for (int t = 1; t <= record.rounds; ++t) {
    const double cum = artifacts.regret_cumulative[t - 1];
    if (std::abs(artifacts.regret_normalized[t - 1] - cum / t) > 1e-9) {
      throw ArtifactError(
          "regret.csv normalized column disagrees with cum/t at t=" +
          std::to_string(t));
    }
  }

  // Recompute regret from the stored estimates; any mismatch means the
  // artifacts were edited or truncated.
  if (record.granularity == RecordGranularity::kFull) {
    const LossOracle oracle = record.make_oracle();
    double cum = 0.0;
    for (int t = 1; t <= record.rounds; ++t) {
      const Matrix& x = record.estimates[t - 1];
      double mean = 0.0;
      for (int i = 0; i < record.agents; ++i) {
        mean += oracle.global_value(t, x.col(i));
      }
      mean /= record.agents;
      cum += mean - oracle.global_value(t, record.trajectory->state(t));
      if (std::abs(cum - artifacts.regret_cumulative[t - 1]) > 1e-9) {
        throw ArtifactError(
            "regret.csv does not match the regret recomputed from "
            "estimates.csv at t=" +
            std::to_string(t) + "; artifacts corrupt or tampered");
      }
    }
  }

  const bool compact = record.set.is_compact();
  const bool non_expansive = record.dynamics.non_expansive;
  result.within_hypotheses = compact && non_expansive;
  result.disagreement_in_hypotheses = non_expansive;

  // Regret bound from the manifest constants.
  std::string bound_report;
  if (artifacts.manifest.count("result.rsq")) {
    BoundInputs inputs;
    inputs.lipschitz = manifest_double(artifacts.manifest, "result.lipschitz");
    inputs.constants.rsq = manifest_double(artifacts.manifest, "result.rsq");
    inputs.constants.divergence_lipschitz =
        manifest_double(artifacts.manifest, "result.divergence_lipschitz");
    inputs.schedule = record.schedule;
    inputs.noise_norms =
        noise_norms(*record.trajectory, record.map.natural_norm());
    inputs.sigma2 = record.sigma2;
    inputs.agents = record.agents;
    inputs.rounds = record.rounds;
    inputs.delta = delta;
    inputs.compact_set = compact;
    inputs.non_expansive = non_expansive;
    const RegretBoundReport report = evaluate_regret_bound(inputs);
    const BoundVerdict verdict = check_bound(result.measured_regret, report);
    result.bound_available = true;
    result.bound_satisfied = verdict.satisfied;
    result.bound_total = report.total;
    result.label = report.within_hypotheses
                       ? (verdict.satisfied ? "ok" : "bound violated")
                       : "outside bound hypotheses";
    bound_report += "measured_regret = " + format_g17(verdict.measured) + "\n";
    bound_report += "bound_total = " + format_g17(report.total) + "\n";
    bound_report += "tracking_error = " + format_g17(report.tracking_error) +
                    "\n";
    bound_report += "network_error = " + format_g17(report.network_error) +
                    "\n";
    bound_report += "stochastic_error = " +
                    format_g17(report.stochastic_error) + "\n";
    bound_report += "slack = " + format_g17(verdict.slack) + "\n";
    bound_report += "satisfied = " + bool_str(verdict.satisfied) + "\n";
    bound_report += "within_hypotheses = " +
                    bool_str(report.within_hypotheses) + "\n";
    bound_report += "compact_set = " + bool_str(report.compact_set) + "\n";
    bound_report += "non_expansive = " + bool_str(report.non_expansive) + "\n";
    bound_report += "lipschitz = " + format_g17(report.lipschitz) + "\n";
    bound_report += "rsq = " + format_g17(report.rsq) + "\n";
    bound_report += "divergence_lipschitz = " +
                    format_g17(report.divergence_lipschitz) + "\n";
    bound_report += "sigma2 = " + format_g17(report.sigma2) + "\n";
    bound_report += "delta = " + format_g17(report.delta) + "\n";
    bound_report += "eta_final = " + format_g17(report.eta_final) + "\n";
    bound_report += "label = " + result.label + "\n";
  } else {
    result.bound_available = false;
    result.label = "bound constants unavailable (non-compact set, no bound "
                   "box configured)";
    bound_report = "label = " + result.label + "\n";
    bound_report += "measured_regret = " + format_g17(result.measured_regret) +
                    "\n";
  }
  atomic_write_file(dir / "bound_report.txt", bound_report);

  // Disagreement diagnostic needs per-agent estimates.
  if (record.granularity == RecordGranularity::kFull) {
    const double lipschitz =
        artifacts.manifest.count("result.lipschitz")
            ? manifest_double(artifacts.manifest, "result.lipschitz")
            : record.applied_gradient_norm_max;
    const DisagreementReport report =
        network_disagreement(record, lipschitz);
    result.disagreement_violations = report.violations;
    std::string content = "t,measured,bound\n";
    for (int t = 1; t <= record.rounds; ++t) {
      content += std::to_string(t) + "," + format_g17(report.measured[t - 1]) +
                 "," + format_g17(report.bound[t - 1]) + "\n";
    }
    atomic_write_file(dir / "disagreement.csv", content);
  } else {
    result.disagreement_violations = -1;
  }
  return result;
}

DirectoryCheckOutcome check_directory(const std::filesystem::path& dir,
                                      double delta) {
  std::vector<std::filesystem::path> run_dirs;
  if (std::filesystem::exists(dir / "manifest.txt")) {
    run_dirs.push_back(dir);
  } else if (std::filesystem::exists(dir)) {
    for (auto it = std::filesystem::recursive_directory_iterator(dir);
         it != std::filesystem::recursive_directory_iterator(); ++it) {
      if (it->is_regular_file() && it->path().filename() == "manifest.txt") {
        run_dirs.push_back(it->path().parent_path());
      }
    }
    std::sort(run_dirs.begin(), run_dirs.end());
  }
  if (run_dirs.empty()) {
    throw ArtifactError("no run artifacts under '" + dir.string() + "'");
  }

  DirectoryCheckOutcome outcome;
  for (const auto& run_dir : run_dirs) {
    RunCheckResult result = check_run_directory(run_dir, delta);
    if (result.within_hypotheses && result.bound_available) {
      ++outcome.in_hypothesis_runs;
      if (!result.bound_satisfied) ++outcome.bound_violations;
    }
    if (result.disagreement_in_hypotheses &&
        result.disagreement_violations > 0) {
      outcome.disagreement_violations += result.disagreement_violations;
    }
    outcome.runs.push_back(std::move(result));
  }

  bool frequency_ok = true;
  if (outcome.in_hypothesis_runs == 1) {
    frequency_ok = outcome.bound_violations == 0;
  } else if (outcome.in_hypothesis_runs > 1) {
    frequency_ok = violation_frequency_ok(outcome.bound_violations,
                                          outcome.in_hypothesis_runs, delta);
  }
  outcome.ok = frequency_ok && outcome.disagreement_violations == 0;

  std::ostringstream summary;
  summary << outcome.runs.size() << " run(s), " << outcome.in_hypothesis_runs
          << " within bound hypotheses, " << outcome.bound_violations
          << " bound violation(s), " << outcome.disagreement_violations
          << " disagreement violation(s)";
  outcome.summary = summary.str();
  return outcome;
}

std::vector<SweepRunSummary> run_sweep(const ExperimentSpec& base,
                                       const SweepSpec& sweep,
                                       const std::filesystem::path& out_dir,
                                       int stride, int jobs) {
  if (sweep.parameter.empty()) throw ConfigError("sweep parameter is empty");
  if (sweep.values.empty()) throw ConfigError("sweep needs a nonempty value list");
  if (sweep.seeds_per_value < 1) throw ConfigError("sweep needs seeds >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");

  struct Job {
    double value;
    std::uint64_t seed;
    std::filesystem::path dir;
    std::vector<double> normalized;  // per-round series
  };
  std::vector<Job> jobs_list;
  for (const double value : sweep.values) {
    for (int s = 0; s < sweep.seeds_per_value; ++s) {
      Job job;
      job.value = value;
      job.seed = base.seed + static_cast<std::uint64_t>(s);
      job.dir = out_dir / value_dir_name(sweep.parameter, value) /
                ("seed-" + std::to_string(job.seed));
      jobs_list.push_back(std::move(job));
    }
  }

  // Validate the parameter name once before spending any compute.
  {
    ExperimentSpec probe = base;
    apply_key(probe, sweep.parameter, format_g17(sweep.values.front()));
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= jobs_list.size()) return;
      Job& job = jobs_list[index];
      try {
        ExperimentSpec spec = base;
        apply_key(spec, sweep.parameter, format_g17(job.value));
        spec.seed = job.seed;
        const RunRecord record = run_experiment_and_write(spec, job.dir);
        double cum = 0.0;
        job.normalized.reserve(record.rounds);
        for (int t = 1; t <= record.rounds; ++t) {
          cum += record.mean_loss[t - 1] - record.comparator_loss[t - 1];
          job.normalized.push_back(cum / t);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const int workers =
      std::max(1, std::min<int>(jobs, static_cast<int>(jobs_list.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::string sweep_csv = "param,value,seed,t,norm_regret\n";
  std::string summary_csv = "param,value,seed,terminal_norm_regret\n";
  std::vector<SweepRunSummary> summaries;
  for (const Job& job : jobs_list) {
    const int rounds = static_cast<int>(job.normalized.size());
    for (int t = stride; t <= rounds; t += stride) {
      sweep_csv += sweep.parameter + "," + format_g17(job.value) + "," +
                   std::to_string(job.seed) + "," + std::to_string(t) + "," +
                   format_g17(job.normalized[t - 1]) + "\n";
    }
    if (rounds % stride != 0) {
      sweep_csv += sweep.parameter + "," + format_g17(job.value) + "," +
                   std::to_string(job.seed) + "," + std::to_string(rounds) +
                   "," + format_g17(job.normalized.back()) + "\n";
    }
    summary_csv += sweep.parameter + "," + format_g17(job.value) + "," +
                   std::to_string(job.seed) + "," +
                   format_g17(job.normalized.back()) + "\n";
    summaries.push_back({job.value, job.seed, job.normalized.back()});
  }
  std::filesystem::create_directories(out_dir);
  atomic_write_file(out_dir / "sweep.csv", sweep_csv);
  atomic_write_file(out_dir / "summary.csv", summary_csv);
  return summaries;
}

}  // namespace dmtrack
