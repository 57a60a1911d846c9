#include "dmtrack/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dmtrack {
namespace {

void require_trajectory(const std::shared_ptr<const TargetTrajectory>& traj) {
  if (!traj || traj->states.empty()) {
    throw std::invalid_argument("loss oracle needs a nonempty trajectory");
  }
}

}  // namespace

LossOracle LossOracle::quadratic_tracking(
    std::shared_ptr<const TargetTrajectory> trajectory, int agents,
    double gradient_noise_amplitude, std::optional<double> clip,
    MirrorMapKind norm_kind) {
  require_trajectory(trajectory);
  if (agents < 1) throw std::invalid_argument("loss oracle needs agents >= 1");
  if (gradient_noise_amplitude < 0.0) {
    throw std::invalid_argument("gradient noise amplitude must be >= 0");
  }
  LossOracle o;
  o.family_ = LossFamily::kQuadraticTracking;
  o.agents_ = agents;
  o.trajectory_ = std::move(trajectory);
  o.gradient_noise_amplitude_ = gradient_noise_amplitude;
  o.clip_ = clip;
  o.norm_kind_ = norm_kind;
  return o;
}

LossOracle LossOracle::quartic_sensor(
    std::shared_ptr<const TargetTrajectory> trajectory, int agents,
    std::optional<double> clip, MirrorMapKind norm_kind) {
  require_trajectory(trajectory);
  if (trajectory->dimension() != 4) {
    throw std::invalid_argument("quartic sensor losses require dimension 4");
  }
  if (agents < 4) {
    throw std::invalid_argument(
        "quartic sensor losses need at least 4 agents so every coordinate "
        "is observed");
  }
  LossOracle o;
  o.family_ = LossFamily::kQuarticSensor;
  o.agents_ = agents;
  o.trajectory_ = std::move(trajectory);
  o.clip_ = clip;
  o.norm_kind_ = norm_kind;
  o.coordinate_.resize(agents);
  for (int i = 0; i < agents; ++i) o.coordinate_[i] = i % 4;
  return o;
}

int LossOracle::coordinate_index(int agent) const {
  if (family_ != LossFamily::kQuarticSensor) {
    throw std::logic_error("coordinate_index is quartic-only");
  }
  if (agent < 0 || agent >= agents_) {
    throw std::out_of_range("agent index out of range");
  }
  return coordinate_[agent];
}

void LossOracle::check_query(int agent, int round, const Vector& x) const {
  if (agent < 0 || agent >= agents_) {
    throw std::out_of_range("agent index " + std::to_string(agent) +
                            " out of range [0, " + std::to_string(agents_) +
                            ")");
  }
  if (round < 1 || round > trajectory_->rounds()) {
    throw std::out_of_range("round " + std::to_string(round) +
                            " outside horizon [1, " +
                            std::to_string(trajectory_->rounds()) + "]");
  }
  if (x.size() != trajectory_->dimension()) {
    throw std::invalid_argument("query point dimension mismatch");
  }
}

double LossOracle::local_value(int agent, int round, const Vector& x) const {
  check_query(agent, round, x);
  const Vector& target = trajectory_->state(round);
  if (family_ == LossFamily::kQuadraticTracking) {
    return 0.5 * (x - target).squaredNorm();
  }
  const int k = coordinate_[agent];
  const double u = target[k] - x[k];
  const double u2 = u * u;
  // E[(u + w)^4] with w ~ U[-1,1]: u^4 + 2 u^2 + 1/5.
  return 0.25 * (u2 * u2 + 2.0 * u2 + 0.2);
}

Vector LossOracle::exact_gradient(int agent, int round, const Vector& x) const {
  check_query(agent, round, x);
  const Vector& target = trajectory_->state(round);
  if (family_ == LossFamily::kQuadraticTracking) {
    return x - target;
  }
  const int k = coordinate_[agent];
  const double u = target[k] - x[k];
  Vector g = Vector::Zero(x.size());
  g[k] = -(u * u * u + u);
  return g;
}

Vector LossOracle::stochastic_gradient_unclipped(int agent, int round,
                                                 const Vector& x,
                                                 RandomStream& stream) const {
  check_query(agent, round, x);
  const Vector& target = trajectory_->state(round);
  if (family_ == LossFamily::kQuadraticTracking) {
    Vector g = x - target;
    if (gradient_noise_amplitude_ > 0.0) {
      for (int k = 0; k < g.size(); ++k) {
        g[k] += gradient_noise_amplitude_ * stream.uniform(-1.0, 1.0);
      }
    }
    return g;
  }
  const int k = coordinate_[agent];
  const double w = stream.uniform(-1.0, 1.0);
  const double z = target[k] + w;
  const double innovation = z - x[k];
  Vector g = Vector::Zero(x.size());
  g[k] = -(innovation * innovation * innovation);
  return g;
}

StochasticGradientSample LossOracle::stochastic_gradient(
    int agent, int round, const Vector& x, RandomStream& stream) const {
  StochasticGradientSample sample;
  sample.agent = agent;
  sample.round = round;
  sample.g = stochastic_gradient_unclipped(agent, round, x, stream);
  if (clip_) {
    const double norm = dual_norm(sample.g);
    if (norm > *clip_) {
      sample.g *= *clip_ / norm;
      sample.clipped = true;
    }
  }
  return sample;
}

double LossOracle::global_value(int round, const Vector& x) const {
  double acc = 0.0;
  for (int i = 0; i < agents_; ++i) acc += local_value(i, round, x);
  return acc / agents_;
}

double LossOracle::dual_norm(const Vector& v) const {
  return norm_kind_ == MirrorMapKind::kEuclidean
             ? v.norm()
             : v.lpNorm<Eigen::Infinity>();
}

double estimate_lipschitz(const LossOracle& oracle, const FeasibleSet& set,
                          int budget, std::uint64_t seed) {
  if (!set.is_compact()) {
    throw std::domain_error(
        "estimate_lipschitz needs a compact sampling set");
  }
  if (set.dimension() != oracle.dimension()) {
    throw std::invalid_argument("estimate_lipschitz: dimension mismatch");
  }
  double sup = 0.0;
  for (int s = 0; s < budget; ++s) {
    RandomStream stream(
        derive_stream_key(seed, StreamPurpose::kSampling, 0, s));
    const int agent = static_cast<int>(stream.next_u64() % oracle.agents());
    const int round =
        1 + static_cast<int>(stream.next_u64() %
                             static_cast<std::uint64_t>(oracle.rounds()));
    const Vector x = set.sample(stream);
    sup = std::max(sup, oracle.dual_norm(oracle.exact_gradient(agent, round, x)));
    sup = std::max(sup, oracle.dual_norm(oracle.stochastic_gradient_unclipped(
                            agent, round, x, stream)));
  }
  return sup;
}

}  // namespace dmtrack
