#pragma once

#include <optional>

#include "dmtrack/common.hpp"
#include "dmtrack/rng.hpp"

namespace dmtrack {

enum class MirrorMapKind { kEuclidean, kNegativeEntropy };

/// A Bregman geometry: generating function R, its gradient, and the derived
/// divergence D_R(x, y) = R(x) - R(y) - <x - y, grad R(y)>.
///
/// Euclidean uses R(x) = 0.5 * ||x||_2^2 (natural norm l2, dual l2).
/// NegativeEntropy uses R(x) = sum_k x_k log x_k - x_k on the strictly
/// positive orthant (natural norm l1, dual l_inf); its divergence is the
/// KL divergence. Both generators are 1-strongly convex in their norm on
/// the sets this library pairs them with.
struct MirrorMap {
  MirrorMapKind kind = MirrorMapKind::kEuclidean;
  int dimension = 0;

  double generator(const Vector& x) const;
  Vector generator_gradient(const Vector& x) const;

  Norm natural_norm() const {
    return kind == MirrorMapKind::kEuclidean ? Norm::kL2 : Norm::kL1;
  }
  double norm(const Vector& v) const { return vector_norm(v, natural_norm()); }
  double dual_norm(const Vector& v) const {
    return kind == MirrorMapKind::kEuclidean ? v.norm()
                                             : v.lpNorm<Eigen::Infinity>();
  }
};

MirrorMap euclidean_map(int dimension);
MirrorMap negative_entropy_map(int dimension);

enum class FeasibleSetKind { kWholeSpace, kBox, kBall, kSimplex };

/// Convex feasible set for the mirror step. Box, Ball and Simplex are
/// compact; WholeSpace is not and is rejected by every operation that needs
/// sup-based constants.
///
/// The simplex carries a mixing weight mu: the negative-entropy geometry
/// operates on the mu-mixed simplex { (1-mu) p + mu * uniform : p in the
/// simplex }, which stays clear of the boundary so the divergence has a
/// finite Lipschitz constant in its first argument.
class FeasibleSet {
 public:
  static FeasibleSet whole_space(int dimension);
  static FeasibleSet box(Vector lower, Vector upper);
  static FeasibleSet ball(Vector center, double radius);
  static FeasibleSet simplex(int dimension, double mu = 0.01);

  FeasibleSetKind kind() const { return kind_; }
  int dimension() const { return dim_; }
  bool is_compact() const { return kind_ != FeasibleSetKind::kWholeSpace; }
  double mu() const { return mu_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  const Vector& center() const { return center_; }
  double radius() const { return radius_; }

  bool contains(const Vector& x, double tol = 1e-9) const;
  Vector centroid() const;

  /// Euclidean projection, closed form per set family (coordinate clamp,
  /// radial scaling, sort-based simplex projection). Identity on WholeSpace.
  Vector project(const Vector& x) const;

  /// l2 diameter; throws std::domain_error on WholeSpace.
  double diameter() const;

  /// Draws a point of the set (uniform for Box/Ball, flat Dirichlet mixed
  /// toward the uniform vector for Simplex). Throws on WholeSpace.
  Vector sample(RandomStream& stream) const;

 private:
  FeasibleSetKind kind_ = FeasibleSetKind::kWholeSpace;
  int dim_ = 0;
  Vector lower_, upper_;   // box
  Vector center_;          // ball
  double radius_ = 0.0;    // ball
  double mu_ = 0.0;        // simplex mixing weight
};

/// sup_{x,y in X} D_R(x,y) and the Lipschitz constant of D_R in its first
/// argument, the two set-dependent constants of the regret bound.
struct BregmanConstants {
  double rsq = 0.0;
  double divergence_lipschitz = 0.0;  // K
};

/// D_R(x, y). Throws std::invalid_argument on dimension mismatch or, for the
/// negative-entropy map, nonpositive coordinates.
double bregman(const MirrorMap& map, const Vector& x, const Vector& y);

/// argmin_{x in set} { eta * <x, grad> + D_R(x, y) }.
///
/// Euclidean: project(y - eta * grad). NegativeEntropy on the simplex:
/// x_k proportional to y_k * exp(-eta * grad_k), normalized. Any other
/// pairing with the negative-entropy map is rejected.
Vector mirror_step(const MirrorMap& map, const FeasibleSet& set,
                   const Vector& y, const Vector& grad, double eta);

/// Computes the divergence constants on a compact set. Euclidean constants
/// come from the set diameter; negative-entropy constants are maximized over
/// the vertex pairs of the mu-mixed simplex (the divergence is jointly convex
/// so the sup over the product set sits at a vertex pair).
BregmanConstants constants_of(const MirrorMap& map, const FeasibleSet& set);

/// Probe: max over sampled pairs of 0.5*||x-y||^2 - D_R(x,y). A positive
/// return value is a strong-convexity violation.
double max_strong_convexity_violation(const MirrorMap& map,
                                      const FeasibleSet& set, int pairs,
                                      RandomStream& stream);

/// Probe: max over sampled (x, {y_i}, alpha) of
/// D_R(x, sum alpha_i y_i) - sum alpha_i D_R(x, y_i). Positive means the
/// divergence fails separate convexity on the sampled set.
double max_separate_convexity_violation(const MirrorMap& map,
                                        const FeasibleSet& set, int samples,
                                        RandomStream& stream);

}  // namespace dmtrack
