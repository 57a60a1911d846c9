#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "dmtrack/common.hpp"
#include "dmtrack/dynamics.hpp"
#include "dmtrack/geometry.hpp"
#include "dmtrack/rng.hpp"

namespace dmtrack {

enum class LossFamily { kQuadraticTracking, kQuarticSensor };

/// One noisy gradient observation.
struct StochasticGradientSample {
  Vector g;
  int agent = 0;
  int round = 0;
  bool clipped = false;
};

/// Per-agent, per-round loss oracle bound to a realized target trajectory.
///
/// QuadraticTracking: f_{i,t}(x) = 0.5 * ||x - x*_t||_2^2, identical across
/// agents; stochastic gradients add a bounded zero-mean perturbation of
/// configurable amplitude.
///
/// QuarticSensor: agent i observes coordinate k_i of the target through
/// z = x*_t(k_i) + w with w uniform on [-1, 1], and the local loss is the
/// conditional expectation of (z - x(k_i))^4 / 4. With u = x*_t(k_i) - x(k_i)
/// that expectation has the closed form (u^4 + 2 u^2 + 1/5) / 4, which is
/// what value queries return, so regret is evaluated on the true expected
/// loss rather than on sampled ones. The stochastic gradient is the
/// descent-direction innovation -(z - x(k_i))^3 e_{k_i}.
///
/// Oracles are immutable after construction; stochastic sampling takes an
/// explicit per-call stream, so concurrent evaluation is deterministic.
class LossOracle {
 public:
  static LossOracle quadratic_tracking(
      std::shared_ptr<const TargetTrajectory> trajectory,
      int agents,
      double gradient_noise_amplitude,
      std::optional<double> clip,
      MirrorMapKind norm_kind = MirrorMapKind::kEuclidean);

  /// Requires dimension 4; agents are assigned to the four observed
  /// coordinates round-robin (k_i = i mod 4), which partitions them as evenly
  /// as possible, and every coordinate must get at least one observer.
  static LossOracle quartic_sensor(
      std::shared_ptr<const TargetTrajectory> trajectory,
      int agents,
      std::optional<double> clip,
      MirrorMapKind norm_kind = MirrorMapKind::kEuclidean);

  LossFamily family() const { return family_; }
  int agents() const { return agents_; }
  int dimension() const { return trajectory_->dimension(); }
  int rounds() const { return trajectory_->rounds(); }
  const TargetTrajectory& trajectory() const { return *trajectory_; }
  std::shared_ptr<const TargetTrajectory> trajectory_ptr() const {
    return trajectory_;
  }
  std::optional<double> clip() const { return clip_; }
  double gradient_noise_amplitude() const { return gradient_noise_amplitude_; }
  /// Observed coordinate of an agent (quartic family only).
  int coordinate_index(int agent) const;

  double local_value(int agent, int round, const Vector& x) const;
  Vector exact_gradient(int agent, int round, const Vector& x) const;
  StochasticGradientSample stochastic_gradient(int agent, int round,
                                               const Vector& x,
                                               RandomStream& stream) const;
  /// Raw sample before clipping; used by the Lipschitz estimator.
  Vector stochastic_gradient_unclipped(int agent, int round, const Vector& x,
                                       RandomStream& stream) const;

  /// Mean of the local losses; minimized at x*_t for both families.
  double global_value(int round, const Vector& x) const;

  double dual_norm(const Vector& v) const;

 private:
  LossOracle() = default;
  void check_query(int agent, int round, const Vector& x) const;

  LossFamily family_ = LossFamily::kQuadraticTracking;
  int agents_ = 0;
  std::shared_ptr<const TargetTrajectory> trajectory_;
  double gradient_noise_amplitude_ = 0.0;
  std::optional<double> clip_;
  MirrorMapKind norm_kind_ = MirrorMapKind::kEuclidean;
  std::vector<int> coordinate_;  // quartic observation assignment
};

/// Empirical Lipschitz envelope: running sup of exact-gradient and raw
/// stochastic-gradient dual norms over `budget` sampled (agent, round, x)
/// triples drawn from the compact set. Nondecreasing in the budget for a
/// fixed seed.
double estimate_lipschitz(const LossOracle& oracle, const FeasibleSet& set,
                          int budget, std::uint64_t seed);

}  // namespace dmtrack
