#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "dmtrack/common.hpp"
#include "dmtrack/dynamics.hpp"
#include "dmtrack/geometry.hpp"
#include "dmtrack/losses.hpp"
#include "dmtrack/network.hpp"

namespace dmtrack {

enum class ScheduleKind { kConstant, kInverseSqrt, kStaticOptimal };

/// Non-increasing step-size sequence defined on rounds 1..T+1, with
/// eta_0 := eta_1 for the tau = 0 term of the bound formulas.
class StepSizeSchedule {
 public:
  StepSizeSchedule() = default;

  static StepSizeSchedule constant(double eta);
  /// eta_t = c / sqrt(t).
  static StepSizeSchedule inverse_sqrt(double c);
  /// The horizon-tuned constant sqrt((1 - sigma2) / rounds).
  static StepSizeSchedule static_optimal(double sigma2, int rounds);

  double eta(int t) const;
  ScheduleKind kind() const { return kind_; }
  double parameter() const { return parameter_; }

 private:
  ScheduleKind kind_ = ScheduleKind::kConstant;
  double parameter_ = 0.1;  // eta for constant/static-optimal, c otherwise
};

enum class RecordGranularity { kFull, kSummary };

/// Fully materialized run description: every component validated and built.
struct RunConfig {
  int rounds = 0;
  Graph graph;
  WeightMatrix weights;
  MirrorMap map;
  FeasibleSet set;
  LinearDynamics dynamics;
  NoiseProcess noise;
  LossFamily loss_family = LossFamily::kQuadraticTracking;
  double gradient_noise_amplitude = 0.0;
  /// Gradient clip threshold. nullopt disables clipping; kClipAuto derives
  /// the threshold from the realized trajectory envelope (quartic family).
  std::optional<double> clip;
  bool clip_auto = false;
  StepSizeSchedule schedule;
  std::uint64_t seed = 0;
  RecordGranularity granularity = RecordGranularity::kFull;
  int threads = 1;
  Vector target_start;                  // x*_1; zeros(d) when empty
  std::optional<Vector> initial_state;  // default: zero vector, or the set
                                        // centroid when zero is infeasible
  std::shared_ptr<const TargetTrajectory> scripted_trajectory;  // replay
};

/// Everything needed to recompute regret and diagnostics without re-running.
struct RunRecord {
  RecordGranularity granularity = RecordGranularity::kFull;
  int rounds = 0;
  int agents = 0;
  int dimension = 0;
  std::uint64_t seed = 0;
  int threads = 1;

  MirrorMap map;
  FeasibleSet set;
  LinearDynamics dynamics;
  StepSizeSchedule schedule;
  LossFamily loss_family = LossFamily::kQuadraticTracking;
  double gradient_noise_amplitude = 0.0;
  std::optional<double> clip;
  double sigma2 = 0.0;

  std::shared_ptr<const TargetTrajectory> trajectory;

  // Per-round series, always filled (size = rounds).
  std::vector<double> eta;
  std::vector<double> mean_loss;        // (1/n) sum_i f_t(x_{i,t})
  std::vector<double> comparator_loss;  // f_t(x*_t)

  // Full granularity only: d x n snapshots per round.
  std::vector<Matrix> mirror_points;  // xhat_{.,t}
  std::vector<Matrix> estimates;      // x_{.,t}
  std::vector<Matrix> consensus;      // y_{.,t}
  Matrix final_mirror_point;          // xhat_{.,T+1}

  long clip_count = 0;
  double applied_gradient_norm_max = 0.0;  // realized sup of ||g~||_*
  double wall_seconds = 0.0;

  /// Rebuilds the loss oracle this record was produced with.
  LossOracle make_oracle() const;
};

/// Synchronous protocol driver. Each round executes, for every agent:
///   1. propagate   x_{i,t} = A xhat_{i,t}
///   2. communicate y_{i,t} = sum_j w_ij x_{j,t}   (pre-round values, barrier)
///   3. observe     g~_{i,t} = stochastic gradient at x_{i,t}
///   4. mirror step xhat_{i,t+1} = argmin eta_t <x, g~> + D_R(x, y_{i,t})
/// The per-round loss is charged at x_{i,t}. Stages 1, 3 and 4 run over a
/// configurable thread count; results are bit-identical to the serial order
/// because every random draw comes from its own (agent, round) substream.
class Engine {
 public:
  explicit Engine(RunConfig config);

  void initialize();
  void step();
  int current_round() const { return round_; }
  int rounds() const { return config_.rounds; }

  const LossOracle& oracle() const { return *oracle_; }
  const TargetTrajectory& trajectory() const { return *trajectory_; }
  const Matrix& mirror_points() const { return xhat_; }
  const Matrix& estimates() const { return x_; }
  const Matrix& consensus() const { return y_; }

  RunRecord finish();

 private:
  Vector default_initial_state() const;

  RunConfig config_;
  std::shared_ptr<const TargetTrajectory> trajectory_;
  std::optional<LossOracle> oracle_;
  int n_ = 0;
  int d_ = 0;
  int round_ = 1;
  bool initialized_ = false;
  Matrix xhat_, x_, y_, grads_;
  std::vector<double> stage_loss_;
  std::vector<double> stage_norm_;
  std::vector<char> stage_clipped_;
  RunRecord record_;
  double start_time_ = 0.0;
};

/// Runs the full horizon. Deterministic function of (config, seed).
RunRecord run(const RunConfig& config);

/// Identical machinery on the complete graph with uniform weights; the
/// centralized comparator (sigma2 = 0).
RunRecord run_centralized_reference(RunConfig config);

}  // namespace dmtrack
