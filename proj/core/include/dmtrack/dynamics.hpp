#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "dmtrack/common.hpp"
#include "dmtrack/rng.hpp"

namespace dmtrack {

/// Known linear dynamics of the target. The spectral norm is cached so
/// non-expansiveness (||A|| <= 1) can be flagged without recomputation.
struct LinearDynamics {
  Matrix a;
  double spectral_norm = 0.0;
  bool non_expansive = false;

  int dimension() const { return static_cast<int>(a.rows()); }
};

LinearDynamics make_dynamics(Matrix a);
LinearDynamics identity_dynamics(int dimension);

/// Near-constant-velocity kinematics for a planar target: block-diagonal
/// [[1, epsilon], [0, 1]] per axis, state ordered (horizontal position,
/// horizontal velocity, vertical position, vertical velocity). epsilon is
/// the sampling interval in seconds; epsilon = 0 degenerates to the identity.
LinearDynamics ncv_dynamics(double epsilon);

/// Disturbance process driving the target away from its nominal dynamics.
struct NoiseProcess {
  enum class Kind { kZero, kScripted, kNcvScaled, kCustom };

  Kind kind = Kind::kZero;
  std::vector<Vector> scripted;
  double sigma_nu2 = 0.0;  // ncv-scaled
  double epsilon = 0.0;    // ncv-scaled
  std::function<Vector(int round, RandomStream&)> custom;

  static NoiseProcess zero();
  static NoiseProcess scripted_sequence(std::vector<Vector> noises);
  static NoiseProcess ncv_scaled(double sigma_nu2, double epsilon);
  static NoiseProcess custom_generator(
      std::function<Vector(int, RandomStream&)> generator);
};

/// One Gaussian draw from the near-constant-velocity process covariance
/// sigma_nu2 * blockdiag([[e^3/3, e^2/2], [e^2/2, e]]) per axis, via the
/// closed-form 2x2 Cholesky factor.
Vector ncv_raw_draw(double sigma_nu2, double epsilon, RandomStream& stream);

/// The heavy-tailed disturbance used by the tracking experiment: a raw draw
/// rescaled by its own sup-norm, nu * ||nu||_inf. Non-Gaussian by
/// construction, implemented exactly as written.
Vector ncv_noise_step(double sigma_nu2, double epsilon, RandomStream& stream);

/// Realized target path: states x*_1 .. x*_{T+1} and noises v_1 .. v_T with
/// x*_{t+1} = A x*_t + v_t holding exactly as stored.
struct TargetTrajectory {
  std::vector<Vector> states;
  std::vector<Vector> noises;
  LinearDynamics dynamics;

  int rounds() const { return static_cast<int>(noises.size()); }
  int dimension() const {
    return states.empty() ? 0 : static_cast<int>(states.front().size());
  }
  /// Largest sup-norm residual of the recurrence over all rounds.
  double reconstruction_residual() const;
  /// x*_t, 1-based round index in [1, T+1].
  const Vector& state(int t) const { return states[t - 1]; }
  const Vector& noise(int t) const { return noises[t - 1]; }
};

/// Rolls the recurrence forward for `rounds` steps. Stochastic noise kinds
/// draw from the per-round substream of `seed`, so the result is a pure
/// function of (arguments, seed).
TargetTrajectory generate_trajectory(const LinearDynamics& dynamics,
                                     const Vector& start,
                                     const NoiseProcess& noise, int rounds,
                                     std::uint64_t seed);

/// Sum of realized noise magnitudes, the path-deviation measure of the
/// tracking bound.
double path_length(const TargetTrajectory& trajectory, Norm norm);

/// CSV schema "t,x1,...,xd,v1,...,vd"; rows t = 1..T+1, the final row
/// carrying zero noise columns. Values round-trip bit-exactly.
void write_trajectory_csv(const std::filesystem::path& path,
                          const TargetTrajectory& trajectory);

/// Reads the schema above and re-attaches the dynamics. Throws if the stored
/// states fail the recurrence at 1e-12.
TargetTrajectory read_trajectory_csv(const std::filesystem::path& path,
                                     const LinearDynamics& dynamics);

}  // namespace dmtrack
