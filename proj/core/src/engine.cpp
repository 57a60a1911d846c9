#include "dmtrack/engine.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

namespace dmtrack {
namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Runs fn(i) for i in [0, count). With threads > 1 the index range is split
// into contiguous chunks; the first exception (lowest index) wins.
void parallel_for(int count, int threads,
                  const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, count);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      const int begin = w * chunk;
      const int end = std::min(count, begin + chunk);
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

StepSizeSchedule StepSizeSchedule::constant(double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("step size must be > 0");
  StepSizeSchedule s;
  s.kind_ = ScheduleKind::kConstant;
  s.parameter_ = eta;
  return s;
}

StepSizeSchedule StepSizeSchedule::inverse_sqrt(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("step-size scale must be > 0");
  StepSizeSchedule s;
  s.kind_ = ScheduleKind::kInverseSqrt;
  s.parameter_ = c;
  return s;
}

StepSizeSchedule StepSizeSchedule::static_optimal(double sigma2, int rounds) {
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (sigma2 < 0.0 || sigma2 >= 1.0) {
    throw std::invalid_argument("sigma2 must lie in [0, 1)");
  }
  StepSizeSchedule s;
  s.kind_ = ScheduleKind::kStaticOptimal;
  s.parameter_ = std::sqrt((1.0 - sigma2) / rounds);
  return s;
}

double StepSizeSchedule::eta(int t) const {
  if (t < 0) throw std::invalid_argument("schedule index must be >= 0");
  if (kind_ == ScheduleKind::kInverseSqrt) {
    return parameter_ / std::sqrt(static_cast<double>(std::max(t, 1)));
  }
  return parameter_;
}

LossOracle RunRecord::make_oracle() const {
  if (loss_family == LossFamily::kQuadraticTracking) {
    return LossOracle::quadratic_tracking(
        trajectory, agents, gradient_noise_amplitude, clip, map.kind);
  }
  return LossOracle::quartic_sensor(trajectory, agents, clip, map.kind);
}

Engine::Engine(RunConfig config) : config_(std::move(config)) {
  if (config_.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  n_ = config_.graph.n;
  if (n_ < 1) throw std::invalid_argument("graph has no agents");
  if (config_.weights.size() != n_) {
    throw std::invalid_argument("weight matrix size does not match the graph");
  }
  d_ = config_.map.dimension;
  if (config_.set.dimension() != d_ || config_.dynamics.dimension() != d_) {
    throw std::invalid_argument(
        "dimension mismatch across map, set and dynamics (" +
        std::to_string(d_) + ", " + std::to_string(config_.set.dimension()) +
        ", " + std::to_string(config_.dynamics.dimension()) + ")");
  }
  if (config_.map.kind == MirrorMapKind::kNegativeEntropy &&
      config_.set.kind() != FeasibleSetKind::kSimplex) {
    throw std::invalid_argument(
        "negative-entropy map is only supported on the simplex");
  }
  if (config_.threads < 1) config_.threads = 1;

  if (config_.scripted_trajectory) {
    if (config_.scripted_trajectory->rounds() < config_.rounds ||
        config_.scripted_trajectory->dimension() != d_) {
      throw std::invalid_argument(
          "replayed trajectory does not cover the configured horizon");
    }
    trajectory_ = config_.scripted_trajectory;
  } else {
    Vector start = config_.target_start.size() == d_
                       ? config_.target_start
                       : Vector::Zero(d_);
    if (config_.target_start.size() != 0 &&
        config_.target_start.size() != d_) {
      throw std::invalid_argument("target start dimension mismatch");
    }
    trajectory_ = std::make_shared<TargetTrajectory>(generate_trajectory(
        config_.dynamics, start, config_.noise, config_.rounds, config_.seed));
  }

  std::optional<double> clip = config_.clip;
  if (config_.clip_auto && !clip) {
    // Envelope-derived threshold: the innovation magnitude stays below
    // (|u| + 1)^3 as long as estimates remain within twice the realized
    // target envelope (plus slack), so clipping only engages on outliers.
    double envelope = 0.0;
    for (const Vector& s : trajectory_->states) {
      envelope = std::max(envelope, s.lpNorm<Eigen::Infinity>());
    }
    const double u_max = 2.0 * envelope + 2.0;
    clip = (u_max + 1.0) * (u_max + 1.0) * (u_max + 1.0);
  }

  if (config_.loss_family == LossFamily::kQuadraticTracking) {
    oracle_ = LossOracle::quadratic_tracking(trajectory_, n_,
                                             config_.gradient_noise_amplitude,
                                             clip, config_.map.kind);
  } else {
    oracle_ = LossOracle::quartic_sensor(trajectory_, n_, clip,
                                         config_.map.kind);
  }

  record_.granularity = config_.granularity;
  record_.rounds = config_.rounds;
  record_.agents = n_;
  record_.dimension = d_;
  record_.seed = config_.seed;
  record_.threads = config_.threads;
  record_.map = config_.map;
  record_.set = config_.set;
  record_.dynamics = config_.dynamics;
  record_.schedule = config_.schedule;
  record_.loss_family = config_.loss_family;
  record_.gradient_noise_amplitude = config_.gradient_noise_amplitude;
  record_.clip = clip;
  record_.sigma2 = config_.weights.sigma2();
  record_.trajectory = trajectory_;
}

Vector Engine::default_initial_state() const {
  const Vector zero = Vector::Zero(d_);
  if (config_.map.kind == MirrorMapKind::kEuclidean &&
      config_.set.contains(zero)) {
    return zero;
  }
  return config_.set.centroid();
}

void Engine::initialize() {
  Vector x0;
  if (config_.initial_state) {
    x0 = *config_.initial_state;
    if (x0.size() != d_) {
      throw std::invalid_argument("initial state dimension mismatch");
    }
    if (config_.map.kind == MirrorMapKind::kNegativeEntropy &&
        x0.minCoeff() <= 0.0) {
      throw std::invalid_argument(
          "negative-entropy initialization must be strictly positive");
    }
  } else {
    x0 = default_initial_state();
  }
  xhat_ = x0.replicate(1, n_);
  x_ = Matrix::Zero(d_, n_);
  y_ = Matrix::Zero(d_, n_);
  grads_ = Matrix::Zero(d_, n_);
  stage_loss_.assign(n_, 0.0);
  stage_norm_.assign(n_, 0.0);
  stage_clipped_.assign(n_, 0);
  record_.eta.reserve(config_.rounds);
  record_.mean_loss.reserve(config_.rounds);
  record_.comparator_loss.reserve(config_.rounds);
  if (config_.granularity == RecordGranularity::kFull) {
    record_.mirror_points.reserve(config_.rounds);
    record_.estimates.reserve(config_.rounds);
    record_.consensus.reserve(config_.rounds);
  }
  round_ = 1;
  initialized_ = true;
  start_time_ = now_seconds();
}

void Engine::step() {
  if (!initialized_) throw std::logic_error("engine not initialized");
  if (round_ > config_.rounds) {
    throw std::logic_error("horizon exhausted");
  }
  const int t = round_;
  const double eta_t = config_.schedule.eta(t);
  const Matrix& w = config_.weights.matrix();
  const MirrorMap& map = config_.map;

  // (1) propagate through the known dynamics.
  parallel_for(n_, config_.threads, [&](int i) {
    x_.col(i) = config_.dynamics.a * xhat_.col(i);
  });

  // (2) synchronous consensus on the pre-round values; fixed accumulation
  // order keeps the result independent of the thread partition.
  parallel_for(n_, config_.threads, [&](int i) {
    Vector acc = Vector::Zero(d_);
    for (int j = 0; j < n_; ++j) {
      const double weight = w(i, j);
      if (weight != 0.0) acc += weight * x_.col(j);
    }
    y_.col(i) = acc;
  });

  // (3) observe the noisy gradient at x_{i,t} and charge the round's loss.
  parallel_for(n_, config_.threads, [&](int i) {
    RandomStream stream(derive_stream_key(
        config_.seed, StreamPurpose::kGradientObservation, i, t));
    const StochasticGradientSample sample =
        oracle_->stochastic_gradient(i, t, x_.col(i), stream);
    grads_.col(i) = sample.g;
    stage_clipped_[i] = sample.clipped ? 1 : 0;
    stage_norm_[i] = map.dual_norm(sample.g);
    stage_loss_[i] = oracle_->global_value(t, x_.col(i));
  });
  double loss_sum = 0.0;
  for (int i = 0; i < n_; ++i) {
    loss_sum += stage_loss_[i];
    record_.clip_count += stage_clipped_[i];
    record_.applied_gradient_norm_max =
        std::max(record_.applied_gradient_norm_max, stage_norm_[i]);
  }
  record_.eta.push_back(eta_t);
  record_.mean_loss.push_back(loss_sum / n_);
  record_.comparator_loss.push_back(
      oracle_->global_value(t, trajectory_->state(t)));
  if (config_.granularity == RecordGranularity::kFull) {
    record_.mirror_points.push_back(xhat_);
    record_.estimates.push_back(x_);
    record_.consensus.push_back(y_);
  }

  // (4) mirror step toward the next round.
  parallel_for(n_, config_.threads, [&](int i) {
    try {
      xhat_.col(i) = mirror_step(map, config_.set, y_.col(i), grads_.col(i),
                                 eta_t);
    } catch (const std::exception& e) {
      throw std::runtime_error("mirror step failed for agent " +
                               std::to_string(i) + " at round " +
                               std::to_string(t) + ": " + e.what());
    }
  });

  ++round_;
}

RunRecord Engine::finish() {
  if (!initialized_) throw std::logic_error("engine not initialized");
  record_.final_mirror_point = xhat_;
  record_.wall_seconds = now_seconds() - start_time_;
  return std::move(record_);
}

RunRecord run(const RunConfig& config) {
  Engine engine(config);
  engine.initialize();
  while (engine.current_round() <= engine.rounds()) engine.step();
  return engine.finish();
}

RunRecord run_centralized_reference(RunConfig config) {
  const int n = config.graph.n;
  config.graph = complete_graph(n);
  config.weights = uniform_complete_weights(n);
  return run(config);
}

}  // namespace dmtrack
