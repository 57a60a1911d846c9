#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmtrack/engine.hpp"

namespace dmtrack {

/// Configuration / usage problem; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Textual experiment description: preset defaults overlaid with config-file
/// entries and command-line overrides. Unknown keys are rejected to protect
/// experiment provenance.
struct ExperimentSpec {
  std::string preset = "custom";
  int rounds = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string record = "full";  // full | summary

  std::string topology = "grid";  // grid | complete | ring | path | edgelist
  int grid_rows = 5;
  int grid_cols = 5;
  int agents = 0;  // 0: derived from the topology
  std::string edgelist_file;
  std::string weights = "metropolis";  // metropolis | uniform-complete

  std::string map = "euclidean";  // euclidean | negative-entropy
  std::string set = "wholespace";  // wholespace | box | ball | simplex
  int dimension = 4;
  std::vector<double> box_lower, box_upper;
  std::vector<double> ball_center;
  double ball_radius = 1.0;
  double simplex_mu = 0.01;

  std::string dynamics = "ncv";  // ncv | identity
  double epsilon = 0.1;
  std::string noise = "ncv-scaled";  // zero | ncv-scaled
  double sigma_nu2 = 0.5;
  std::string trajectory_file;  // replay a recorded target path

  std::string loss = "quartic-sensor";  // quartic-sensor | quadratic-tracking
  double grad_noise_amplitude = 0.0;
  std::string clip = "none";  // none | auto | <number>

  std::string schedule = "constant";  // constant | inverse-sqrt | static-optimal
  double eta = 0.1;
  double eta_c = 0.1;

  std::string init = "default";  // default | custom
  std::vector<double> init_value;
  std::vector<double> target_start;

  // Bounding box supplying divergence constants when the feasible set is not
  // compact (bound evaluation only; never constrains the run).
  std::vector<double> bound_box_lower, bound_box_upper;
};

/// Built-in presets: ncv-grid25 (the grid tracking experiment),
/// static-quadratic (fixed target, noisy gradients, compact set),
/// complete-graph-centralized (same scenario on the complete graph), custom.
ExperimentSpec preset_spec(const std::string& name);
std::vector<std::string> preset_names();

/// Applies one "key = value" assignment; throws ConfigError on unknown keys
/// or malformed values.
void apply_key(ExperimentSpec& spec, const std::string& key,
               const std::string& value);

/// Parses "key = value" lines ('#' comments, blank lines allowed) on top of
/// `spec`.
void apply_config_text(ExperimentSpec& spec, const std::string& text);
void apply_config_file(ExperimentSpec& spec,
                       const std::filesystem::path& path);

/// Layers preset defaults, an optional config file and overrides, in that
/// order. A `preset` key inside the file restarts the layering from that
/// preset's defaults.
ExperimentSpec resolve_spec(
    const std::optional<std::filesystem::path>& config_file,
    const std::optional<std::string>& preset_flag,
    const std::vector<std::pair<std::string, std::string>>& overrides);

/// Canonical key/value echo of a spec (parse_spec_echo inverts it).
std::vector<std::pair<std::string, std::string>> spec_to_keyvalues(
    const ExperimentSpec& spec);
ExperimentSpec parse_spec_echo(
    const std::map<std::string, std::string>& keyvalues);

struct MaterializedExperiment {
  RunConfig run;
  ExperimentSpec spec;
  /// Compact domain the divergence constants are computed on: the feasible
  /// set itself when compact, otherwise the user-supplied bounding box.
  std::optional<FeasibleSet> constants_domain;
};

/// Builds every component, cross-checking dimensional consistency. Throws
/// ConfigError with a diagnostic on any conflict.
MaterializedExperiment materialize(const ExperimentSpec& spec);

}  // namespace dmtrack
