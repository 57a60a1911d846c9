#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmtrack/analysis.hpp"
#include "dmtrack/config.hpp"
#include "dmtrack/engine.hpp"

namespace dmtrack {

/// Missing or corrupt run artifacts; the CLI maps it to exit code 2.
struct ArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Writes the artifact set of one run into `dir`:
///   regret.csv      "t,cum_regret,norm_regret"
///   trajectory.csv  "t,x1..xd,v1..vd"
///   estimates.csv   "t,agent,x1..xd"      (full granularity only)
///   manifest.txt    config echo plus every derived constant needed to
///                   recompute the regret bound; wall clock appears as a
///                   comment so the file is deterministic otherwise
/// All files are written atomically with 17-significant-digit numbers.
void write_run_artifacts(const std::filesystem::path& dir,
                         const ExperimentSpec& spec,
                         const std::optional<FeasibleSet>& constants_domain,
                         const RunRecord& record);

/// materialize + run + write, returning the record.
RunRecord run_experiment_and_write(const ExperimentSpec& spec,
                                   const std::filesystem::path& dir);

std::map<std::string, std::string> read_manifest(
    const std::filesystem::path& dir);

struct RunArtifacts {
  ExperimentSpec spec;
  std::map<std::string, std::string> manifest;
  RunRecord record;  // rebuilt; loss series left empty
  std::vector<double> regret_cumulative;  // from regret.csv
  std::vector<double> regret_normalized;
};

/// Loads a run directory back into memory; throws ArtifactError on missing
/// files, schema mismatches or a trajectory that fails its recurrence.
RunArtifacts read_run_artifacts(const std::filesystem::path& dir);

struct RunCheckResult {
  std::filesystem::path dir;
  bool within_hypotheses = false;   // compact set and non-expansive dynamics
  bool bound_available = false;
  bool bound_satisfied = true;
  long disagreement_violations = 0;  // -1 when not computable (summary record)
  bool disagreement_in_hypotheses = false;  // non-expansive dynamics
  double measured_regret = 0.0;
  double bound_total = 0.0;
  std::string label;
};

/// Re-derives regret from the stored estimates (tamper check), evaluates the
/// regret bound from manifest constants, runs the disagreement diagnostic,
/// and writes bound_report.txt and disagreement.csv next to the artifacts.
RunCheckResult check_run_directory(const std::filesystem::path& dir,
                                   double delta);

struct DirectoryCheckOutcome {
  std::vector<RunCheckResult> runs;
  int in_hypothesis_runs = 0;
  int bound_violations = 0;         // among in-hypothesis runs
  long disagreement_violations = 0;  // among runs with non-expansive dynamics
  bool ok = true;
  std::string summary;
};

/// Accepts either a single run directory or a tree of them (every directory
/// containing manifest.txt is checked). A single in-hypothesis run must
/// satisfy its bound; across many seeded runs the violation frequency must
/// stay within delta plus a binomial margin. Disagreement violations under
/// non-expansive dynamics always fail.
DirectoryCheckOutcome check_directory(const std::filesystem::path& dir,
                                      double delta);

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
  int seeds_per_value = 1;
};

struct SweepRunSummary {
  double value = 0.0;
  std::uint64_t seed = 0;
  double terminal_normalized_regret = 0.0;
};

/// Runs the base experiment once per (value, seed), each into its own
/// subdirectory, then writes sweep.csv ("param,value,seed,t,norm_regret",
/// thinned to `stride`) and summary.csv ("param,value,seed,
/// terminal_norm_regret") at the sweep root. `jobs` > 1 runs experiments
/// concurrently; outputs are identical to the serial order.
std::vector<SweepRunSummary> run_sweep(const ExperimentSpec& base,
                                       const SweepSpec& sweep,
                                       const std::filesystem::path& out_dir,
                                       int stride = 10, int jobs = 1);

}  // namespace dmtrack
