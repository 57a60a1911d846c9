#include "dmtrack/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dmtrack/csv.hpp"

namespace dmtrack {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    return parse_double(trim(value));
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': malformed number '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != std::floor(v)) {
    throw ConfigError("key '" + key + "' must be an integer, got '" + value +
                      "'");
  }
  return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(trim(value), &pos);
    if (pos != trim(value).size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' must be a nonnegative integer, got '" +
                      value + "'");
  }
}

std::vector<double> to_vector(const std::string& key,
                              const std::string& value) {
  std::vector<double> out;
  std::string field;
  std::stringstream ss(trim(value));
  while (std::getline(ss, field, ',')) out.push_back(to_double(key, field));
  if (out.empty()) throw ConfigError("key '" + key + "' needs a value list");
  return out;
}

std::string vector_to_string(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_g17(v[i]);
  }
  return out;
}

Vector to_eigen(const std::vector<double>& v) {
  Vector out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

void check_choice(const std::string& key, const std::string& value,
                  std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (value == a) return;
  }
  std::string list;
  for (const char* a : allowed) {
    if (!list.empty()) list += ", ";
    list += a;
  }
  throw ConfigError("key '" + key + "': '" + value + "' is not one of {" +
                    list + "}");
}

}  // namespace

ExperimentSpec preset_spec(const std::string& name) {
  ExperimentSpec s;
  s.preset = name;
  if (name == "custom") {
    return s;
  }
  if (name == "ncv-grid25") {
    s.rounds = 1000;
    s.topology = "grid";
    s.grid_rows = 5;
    s.grid_cols = 5;
    s.agents = 25;
    s.weights = "metropolis";
    s.map = "euclidean";
    s.set = "wholespace";
    s.dimension = 4;
    s.dynamics = "ncv";
    s.epsilon = 0.1;
    s.noise = "ncv-scaled";
    s.sigma_nu2 = 0.5;
    s.loss = "quartic-sensor";
    s.clip = "auto";
    s.schedule = "constant";
    s.eta = 0.1;
    s.bound_box_lower = {-100, -100, -100, -100};
    s.bound_box_upper = {100, 100, 100, 100};
    return s;
  }
  if (name == "static-quadratic" || name == "complete-graph-centralized") {
    s.rounds = 1000;
    if (name == "static-quadratic") {
      s.topology = "grid";
      s.grid_rows = 3;
      s.grid_cols = 3;
      s.weights = "metropolis";
    } else {
      s.topology = "complete";
      s.weights = "uniform-complete";
    }
    s.agents = 9;
    s.map = "euclidean";
    s.set = "box";
    s.dimension = 2;
    s.box_lower = {0, 0};
    s.box_upper = {1, 1};
    s.dynamics = "identity";
    s.noise = "zero";
    s.loss = "quadratic-tracking";
    s.grad_noise_amplitude = 0.5;
    s.schedule = "static-optimal";
    s.target_start = {0.7, 0.3};
    return s;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"ncv-grid25", "static-quadratic", "complete-graph-centralized",
          "custom"};
}

void apply_key(ExperimentSpec& spec, const std::string& raw_key,
               const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "preset") {
    spec = preset_spec(value);
  } else if (key == "T" || key == "rounds") {
    spec.rounds = to_int(key, value);
  } else if (key == "seed") {
    spec.seed = to_u64(key, value);
  } else if (key == "threads") {
    spec.threads = to_int(key, value);
  } else if (key == "record") {
    check_choice(key, value, {"full", "summary"});
    spec.record = value;
  } else if (key == "topology") {
    check_choice(key, value, {"grid", "complete", "ring", "path", "edgelist"});
    spec.topology = value;
  } else if (key == "grid_rows") {
    spec.grid_rows = to_int(key, value);
  } else if (key == "grid_cols") {
    spec.grid_cols = to_int(key, value);
  } else if (key == "n") {
    spec.agents = to_int(key, value);
  } else if (key == "edgelist_file") {
    spec.edgelist_file = value;
  } else if (key == "weights") {
    check_choice(key, value, {"metropolis", "uniform-complete"});
    spec.weights = value;
  } else if (key == "map") {
    check_choice(key, value, {"euclidean", "negative-entropy"});
    spec.map = value;
  } else if (key == "set") {
    check_choice(key, value, {"wholespace", "box", "ball", "simplex"});
    spec.set = value;
  } else if (key == "dimension") {
    spec.dimension = to_int(key, value);
  } else if (key == "box_lower") {
    spec.box_lower = to_vector(key, value);
  } else if (key == "box_upper") {
    spec.box_upper = to_vector(key, value);
  } else if (key == "ball_center") {
    spec.ball_center = to_vector(key, value);
  } else if (key == "ball_radius") {
    spec.ball_radius = to_double(key, value);
  } else if (key == "simplex_mu") {
    spec.simplex_mu = to_double(key, value);
  } else if (key == "dynamics") {
    check_choice(key, value, {"ncv", "identity"});
    spec.dynamics = value;
  } else if (key == "epsilon") {
    spec.epsilon = to_double(key, value);
  } else if (key == "noise") {
    check_choice(key, value, {"zero", "ncv-scaled"});
    spec.noise = value;
  } else if (key == "sigma_nu2") {
    spec.sigma_nu2 = to_double(key, value);
  } else if (key == "trajectory_file") {
    spec.trajectory_file = value;
  } else if (key == "loss") {
    check_choice(key, value, {"quartic-sensor", "quadratic-tracking"});
    spec.loss = value;
  } else if (key == "grad_noise_amplitude") {
    spec.grad_noise_amplitude = to_double(key, value);
  } else if (key == "clip") {
    if (value != "none" && value != "auto") to_double(key, value);
    spec.clip = value;
  } else if (key == "schedule") {
    check_choice(key, value, {"constant", "inverse-sqrt", "static-optimal"});
    spec.schedule = value;
  } else if (key == "eta") {
    spec.eta = to_double(key, value);
  } else if (key == "eta_c") {
    spec.eta_c = to_double(key, value);
  } else if (key == "init") {
    check_choice(key, value, {"default", "custom"});
    spec.init = value;
  } else if (key == "init_value") {
    spec.init_value = to_vector(key, value);
  } else if (key == "target_start") {
    spec.target_start = to_vector(key, value);
  } else if (key == "bound_box_lower") {
    spec.bound_box_lower = to_vector(key, value);
  } else if (key == "bound_box_upper") {
    spec.bound_box_upper = to_vector(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void apply_config_text(ExperimentSpec& spec, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    apply_key(spec, line.substr(0, eq), line.substr(eq + 1));
  }
}

void apply_config_file(ExperimentSpec& spec,
                       const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file '" + path.string() + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(spec, buffer.str());
}

ExperimentSpec resolve_spec(
    const std::optional<std::filesystem::path>& config_file,
    const std::optional<std::string>& preset_flag,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentSpec spec = preset_spec(preset_flag.value_or("custom"));
  if (config_file) apply_config_file(spec, *config_file);
  for (const auto& [key, value] : overrides) apply_key(spec, key, value);
  return spec;
}

std::vector<std::pair<std::string, std::string>> spec_to_keyvalues(
    const ExperimentSpec& s) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto put = [&kv](const std::string& k, const std::string& v) {
    kv.emplace_back(k, v);
  };
  put("preset", s.preset);
  put("T", std::to_string(s.rounds));
  put("seed", std::to_string(s.seed));
  put("threads", std::to_string(s.threads));
  put("record", s.record);
  put("topology", s.topology);
  if (s.topology == "grid") {
    put("grid_rows", std::to_string(s.grid_rows));
    put("grid_cols", std::to_string(s.grid_cols));
  }
  if (s.agents > 0) put("n", std::to_string(s.agents));
  if (!s.edgelist_file.empty()) put("edgelist_file", s.edgelist_file);
  put("weights", s.weights);
  put("map", s.map);
  put("set", s.set);
  put("dimension", std::to_string(s.dimension));
  if (!s.box_lower.empty()) put("box_lower", vector_to_string(s.box_lower));
  if (!s.box_upper.empty()) put("box_upper", vector_to_string(s.box_upper));
  if (!s.ball_center.empty()) {
    put("ball_center", vector_to_string(s.ball_center));
    put("ball_radius", format_g17(s.ball_radius));
  }
  if (s.set == "simplex") put("simplex_mu", format_g17(s.simplex_mu));
  put("dynamics", s.dynamics);
  if (s.dynamics == "ncv") put("epsilon", format_g17(s.epsilon));
  put("noise", s.noise);
  if (s.noise == "ncv-scaled") put("sigma_nu2", format_g17(s.sigma_nu2));
  if (!s.trajectory_file.empty()) put("trajectory_file", s.trajectory_file);
  put("loss", s.loss);
  put("grad_noise_amplitude", format_g17(s.grad_noise_amplitude));
  put("clip", s.clip);
  put("schedule", s.schedule);
  put("eta", format_g17(s.eta));
  if (s.schedule == "inverse-sqrt") put("eta_c", format_g17(s.eta_c));
  put("init", s.init);
  if (!s.init_value.empty()) put("init_value", vector_to_string(s.init_value));
  if (!s.target_start.empty()) {
    put("target_start", vector_to_string(s.target_start));
  }
  if (!s.bound_box_lower.empty()) {
    put("bound_box_lower", vector_to_string(s.bound_box_lower));
    put("bound_box_upper", vector_to_string(s.bound_box_upper));
  }
  return kv;
}

ExperimentSpec parse_spec_echo(
    const std::map<std::string, std::string>& keyvalues) {
  ExperimentSpec spec;
  const auto preset = keyvalues.find("preset");
  if (preset != keyvalues.end()) spec.preset = preset->second;
  for (const auto& [key, value] : keyvalues) {
    if (key == "preset" || key.rfind("result.", 0) == 0) continue;
    apply_key(spec, key, value);
  }
  return spec;
}

MaterializedExperiment materialize(const ExperimentSpec& spec) {
  MaterializedExperiment out;
  out.spec = spec;
  RunConfig& run = out.run;

  if (spec.rounds < 1) throw ConfigError("T must be >= 1");
  if (spec.threads < 1) throw ConfigError("threads must be >= 1");

  // Topology, with an explicit agent-count cross-check.
  try {
    if (spec.topology == "grid") {
      run.graph = grid_graph(spec.grid_rows, spec.grid_cols);
    } else if (spec.topology == "edgelist") {
      if (spec.edgelist_file.empty()) {
        throw ConfigError("topology 'edgelist' needs edgelist_file");
      }
      run.graph = read_edge_list(spec.edgelist_file);
    } else {
      const int n = spec.agents;
      if (n < 1) {
        throw ConfigError("topology '" + spec.topology + "' needs n >= 1");
      }
      run.graph = spec.topology == "complete" ? complete_graph(n)
                  : spec.topology == "ring"   ? ring_graph(n)
                                              : path_graph(n);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("topology: ") + e.what());
  }
  if (spec.agents > 0 && spec.agents != run.graph.n) {
    throw ConfigError(
        "agent count mismatch: n = " + std::to_string(spec.agents) +
        " but the '" + spec.topology + "' topology has " +
        std::to_string(run.graph.n) + " nodes");
  }

  try {
    if (spec.weights == "metropolis") {
      run.weights = metropolis_weights(run.graph);
    } else {
      const bool complete =
          static_cast<int>(run.graph.edges.size()) ==
          run.graph.n * (run.graph.n - 1) / 2;
      if (!complete) {
        throw ConfigError(
            "uniform-complete weights require the complete topology");
      }
      run.weights = uniform_complete_weights(run.graph.n);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("weights: ") + e.what());
  }

  // Geometry.
  int d = spec.dimension;
  if (spec.dynamics == "ncv" && d != 4) {
    throw ConfigError("ncv dynamics fix dimension = 4, got " +
                      std::to_string(d));
  }
  if (d < 1) throw ConfigError("dimension must be >= 1");
  run.map = spec.map == "euclidean" ? euclidean_map(d)
                                    : negative_entropy_map(d);
  try {
    if (spec.set == "wholespace") {
      run.set = FeasibleSet::whole_space(d);
    } else if (spec.set == "box") {
      if (static_cast<int>(spec.box_lower.size()) != d ||
          static_cast<int>(spec.box_upper.size()) != d) {
        throw ConfigError("box bounds must have " + std::to_string(d) +
                          " coordinates");
      }
      run.set = FeasibleSet::box(to_eigen(spec.box_lower),
                                 to_eigen(spec.box_upper));
    } else if (spec.set == "ball") {
      if (static_cast<int>(spec.ball_center.size()) != d) {
        throw ConfigError("ball center must have " + std::to_string(d) +
                          " coordinates");
      }
      run.set = FeasibleSet::ball(to_eigen(spec.ball_center),
                                  spec.ball_radius);
    } else {
      run.set = FeasibleSet::simplex(d, spec.simplex_mu);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("set: ") + e.what());
  }
  if (spec.map == "negative-entropy" && spec.set != "simplex") {
    throw ConfigError("map 'negative-entropy' requires set 'simplex'");
  }

  try {
    run.dynamics = spec.dynamics == "ncv" ? ncv_dynamics(spec.epsilon)
                                          : identity_dynamics(d);
    run.noise = spec.noise == "zero"
                    ? NoiseProcess::zero()
                    : NoiseProcess::ncv_scaled(spec.sigma_nu2, spec.epsilon);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("dynamics: ") + e.what());
  }

  if (!spec.trajectory_file.empty()) {
    try {
      run.scripted_trajectory = std::make_shared<TargetTrajectory>(
          read_trajectory_csv(spec.trajectory_file, run.dynamics));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("trajectory_file: ") + e.what());
    }
  }

  run.loss_family = spec.loss == "quartic-sensor"
                        ? LossFamily::kQuarticSensor
                        : LossFamily::kQuadraticTracking;
  if (run.loss_family == LossFamily::kQuarticSensor && d != 4) {
    throw ConfigError("quartic-sensor losses fix dimension = 4");
  }
  run.gradient_noise_amplitude = spec.grad_noise_amplitude;
  if (spec.clip == "auto") {
    run.clip_auto = true;
  } else if (spec.clip != "none") {
    const double v = to_double("clip", spec.clip);
    if (!(v > 0.0)) throw ConfigError("clip threshold must be > 0");
    run.clip = v;
  }

  try {
    if (spec.schedule == "constant") {
      run.schedule = StepSizeSchedule::constant(spec.eta);
    } else if (spec.schedule == "inverse-sqrt") {
      run.schedule = StepSizeSchedule::inverse_sqrt(spec.eta_c);
    } else {
      run.schedule = StepSizeSchedule::static_optimal(run.weights.sigma2(),
                                                      spec.rounds);
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }

  run.rounds = spec.rounds;
  run.seed = spec.seed;
  run.threads = spec.threads;
  run.granularity = spec.record == "full" ? RecordGranularity::kFull
                                          : RecordGranularity::kSummary;
  if (!spec.target_start.empty()) {
    if (static_cast<int>(spec.target_start.size()) != d) {
      throw ConfigError("target_start must have " + std::to_string(d) +
                        " coordinates");
    }
    run.target_start = to_eigen(spec.target_start);
  }
  if (spec.init == "custom") {
    if (static_cast<int>(spec.init_value.size()) != d) {
      throw ConfigError("init 'custom' needs init_value with " +
                        std::to_string(d) + " coordinates");
    }
    run.initial_state = to_eigen(spec.init_value);
  }

  if (run.set.is_compact()) {
    out.constants_domain = run.set;
  } else if (!spec.bound_box_lower.empty() || !spec.bound_box_upper.empty()) {
    if (static_cast<int>(spec.bound_box_lower.size()) != d ||
        static_cast<int>(spec.bound_box_upper.size()) != d) {
      throw ConfigError("bound box must have " + std::to_string(d) +
                        " coordinates per side");
    }
    out.constants_domain = FeasibleSet::box(to_eigen(spec.bound_box_lower),
                                            to_eigen(spec.bound_box_upper));
  }
  return out;
}

}  // namespace dmtrack
