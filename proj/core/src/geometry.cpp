#include "dmtrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmtrack {
namespace {

void check_dimension(int expected, const Vector& v, const char* what) {
  if (v.size() != expected) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(expected) + ", got " +
                                std::to_string(v.size()));
  }
}

void check_positive_coordinates(const Vector& v, const char* what) {
  if (v.size() == 0 || v.minCoeff() <= 0.0) {
    throw std::invalid_argument(
        std::string(what) +
        ": negative-entropy geometry requires strictly positive coordinates");
  }
}

// Euclidean projection onto the probability simplex (sort-based).
Vector project_simplex(const Vector& v) {
  const int d = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + d);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumulative = 0.0;
  double tau = 0.0;
  int support = 0;
  for (int j = 0; j < d; ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / (j + 1);
    if (u[j] - candidate > 0.0) {
      tau = candidate;
      support = j + 1;
    }
  }
  (void)support;
  Vector out(d);
  for (int k = 0; k < d; ++k) out[k] = std::max(v[k] - tau, 0.0);
  return out;
}

}  // namespace

double MirrorMap::generator(const Vector& x) const {
  check_dimension(dimension, x, "generator");
  if (kind == MirrorMapKind::kEuclidean) return 0.5 * x.squaredNorm();
  check_positive_coordinates(x, "generator");
  double acc = 0.0;
  for (int k = 0; k < x.size(); ++k) acc += x[k] * std::log(x[k]) - x[k];
  return acc;
}

Vector MirrorMap::generator_gradient(const Vector& x) const {
  check_dimension(dimension, x, "generator_gradient");
  if (kind == MirrorMapKind::kEuclidean) return x;
  check_positive_coordinates(x, "generator_gradient");
  return x.array().log().matrix();
}

MirrorMap euclidean_map(int dimension) {
  if (dimension < 1) throw std::invalid_argument("map dimension must be >= 1");
  return MirrorMap{MirrorMapKind::kEuclidean, dimension};
}

MirrorMap negative_entropy_map(int dimension) {
  if (dimension < 1) throw std::invalid_argument("map dimension must be >= 1");
  return MirrorMap{MirrorMapKind::kNegativeEntropy, dimension};
}

FeasibleSet FeasibleSet::whole_space(int dimension) {
  if (dimension < 1) throw std::invalid_argument("set dimension must be >= 1");
  FeasibleSet s;
  s.kind_ = FeasibleSetKind::kWholeSpace;
  s.dim_ = dimension;
  return s;
}

FeasibleSet FeasibleSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw std::invalid_argument("box bounds must be nonempty and match");
  }
  if (((upper - lower).array() < 0.0).any()) {
    throw std::invalid_argument("box requires lower <= upper coordinatewise");
  }
  FeasibleSet s;
  s.kind_ = FeasibleSetKind::kBox;
  s.dim_ = static_cast<int>(lower.size());
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

FeasibleSet FeasibleSet::ball(Vector center, double radius) {
  if (center.size() == 0) throw std::invalid_argument("ball center is empty");
  if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be > 0");
  FeasibleSet s;
  s.kind_ = FeasibleSetKind::kBall;
  s.dim_ = static_cast<int>(center.size());
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

FeasibleSet FeasibleSet::simplex(int dimension, double mu) {
  if (dimension < 1) throw std::invalid_argument("set dimension must be >= 1");
  if (!(mu > 0.0) || mu >= 1.0) {
    throw std::invalid_argument("simplex mixing weight must be in (0, 1)");
  }
  FeasibleSet s;
  s.kind_ = FeasibleSetKind::kSimplex;
  s.dim_ = dimension;
  s.mu_ = mu;
  return s;
}

bool FeasibleSet::contains(const Vector& x, double tol) const {
  if (x.size() != dim_) return false;
  switch (kind_) {
    case FeasibleSetKind::kWholeSpace:
      return true;
    case FeasibleSetKind::kBox:
      return ((x - lower_).array() >= -tol).all() &&
             ((upper_ - x).array() >= -tol).all();
    case FeasibleSetKind::kBall:
      return (x - center_).norm() <= radius_ + tol;
    case FeasibleSetKind::kSimplex:
      return (x.array() >= -tol).all() &&
             std::abs(x.sum() - 1.0) <= std::max(tol, 1e-12);
  }
  return false;
}

Vector FeasibleSet::centroid() const {
  switch (kind_) {
    case FeasibleSetKind::kWholeSpace:
      return Vector::Zero(dim_);
    case FeasibleSetKind::kBox:
      return 0.5 * (lower_ + upper_);
    case FeasibleSetKind::kBall:
      return center_;
    case FeasibleSetKind::kSimplex:
      return Vector::Constant(dim_, 1.0 / dim_);
  }
  return Vector::Zero(dim_);
}

Vector FeasibleSet::project(const Vector& x) const {
  check_dimension(dim_, x, "project");
  switch (kind_) {
    case FeasibleSetKind::kWholeSpace:
      return x;
    case FeasibleSetKind::kBox:
      return x.cwiseMax(lower_).cwiseMin(upper_);
    case FeasibleSetKind::kBall: {
      const Vector offset = x - center_;
      const double dist = offset.norm();
      if (dist <= radius_) return x;
      return center_ + offset * (radius_ / dist);
    }
    case FeasibleSetKind::kSimplex:
      return project_simplex(x);
  }
  return x;
}

double FeasibleSet::diameter() const {
  switch (kind_) {
    case FeasibleSetKind::kWholeSpace:
      throw std::domain_error("whole space has no finite diameter");
    case FeasibleSetKind::kBox:
      return (upper_ - lower_).norm();
    case FeasibleSetKind::kBall:
      return 2.0 * radius_;
    case FeasibleSetKind::kSimplex:
      return dim_ >= 2 ? std::sqrt(2.0) : 0.0;
  }
  return 0.0;
}

Vector FeasibleSet::sample(RandomStream& stream) const {
  switch (kind_) {
    case FeasibleSetKind::kWholeSpace:
      throw std::domain_error("cannot sample the whole space");
    case FeasibleSetKind::kBox: {
      Vector x(dim_);
      for (int k = 0; k < dim_; ++k) x[k] = stream.uniform(lower_[k], upper_[k]);
      return x;
    }
    case FeasibleSetKind::kBall: {
      Vector z(dim_);
      for (int k = 0; k < dim_; ++k) z[k] = stream.normal();
      const double len = z.norm();
      if (len == 0.0) return center_;
      const double r = radius_ * std::pow(stream.uniform01(), 1.0 / dim_);
      return center_ + z * (r / len);
    }
    case FeasibleSetKind::kSimplex: {
      // Flat Dirichlet via normalized exponentials, then mix toward uniform
      // to stay inside the operating set.
      Vector e(dim_);
      for (int k = 0; k < dim_; ++k) {
        e[k] = -std::log(1.0 - stream.uniform01());
      }
      const double total = e.sum();
      Vector p = total > 0.0 ? Vector(e / total) : centroid();
      return (1.0 - mu_) * p + Vector::Constant(dim_, mu_ / dim_);
    }
  }
  return Vector::Zero(dim_);
}

double bregman(const MirrorMap& map, const Vector& x, const Vector& y) {
  check_dimension(map.dimension, x, "bregman");
  check_dimension(map.dimension, y, "bregman");
  if (map.kind == MirrorMapKind::kEuclidean) {
    return 0.5 * (x - y).squaredNorm();
  }
  check_positive_coordinates(x, "bregman");
  check_positive_coordinates(y, "bregman");
  double acc = 0.0;
  for (int k = 0; k < x.size(); ++k) {
    acc += x[k] * std::log(x[k] / y[k]) - x[k] + y[k];
  }
  return acc;
}

Vector mirror_step(const MirrorMap& map, const FeasibleSet& set,
                   const Vector& y, const Vector& grad, double eta) {
  check_dimension(map.dimension, y, "mirror_step");
  check_dimension(map.dimension, grad, "mirror_step");
  if (set.dimension() != map.dimension) {
    throw std::invalid_argument("mirror_step: set/map dimension mismatch");
  }
  if (!(eta > 0.0)) throw std::invalid_argument("mirror_step: eta must be > 0");
  if (!grad.allFinite()) {
    throw std::invalid_argument("mirror_step: non-finite gradient");
  }
  if (map.kind == MirrorMapKind::kEuclidean) {
    return set.project(y - eta * grad);
  }
  if (set.kind() != FeasibleSetKind::kSimplex) {
    throw std::invalid_argument(
        "mirror_step: negative-entropy map is only supported on the simplex");
  }
  check_positive_coordinates(y, "mirror_step");
  // Multiplicative update in log space, shifted for overflow safety.
  Eigen::ArrayXd logits = y.array().log() - eta * grad.array();
  logits -= logits.maxCoeff();
  Eigen::ArrayXd w = logits.exp();
  return (w / w.sum()).matrix();
}

BregmanConstants constants_of(const MirrorMap& map, const FeasibleSet& set) {
  if (!set.is_compact()) {
    throw std::domain_error(
        "constants_of: divergence constants need a compact set");
  }
  if (set.dimension() != map.dimension) {
    throw std::invalid_argument("constants_of: set/map dimension mismatch");
  }
  BregmanConstants out;
  if (map.kind == MirrorMapKind::kEuclidean) {
    const double diam = set.diameter();
    out.rsq = 0.5 * diam * diam;
    out.divergence_lipschitz = diam;
    return out;
  }
  if (set.kind() != FeasibleSetKind::kSimplex) {
    throw std::invalid_argument(
        "constants_of: negative-entropy map is only supported on the simplex");
  }
  // Vertices of the mu-mixed simplex. The divergence is jointly convex, so
  // both sups over the product of the mixed set with itself are attained at
  // vertex pairs.
  const int d = set.dimension();
  const double mu = set.mu();
  std::vector<Vector> vertices;
  vertices.reserve(d);
  for (int k = 0; k < d; ++k) {
    Vector v = Vector::Constant(d, mu / d);
    v[k] += 1.0 - mu;
    vertices.push_back(std::move(v));
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      out.rsq = std::max(out.rsq, bregman(map, vertices[i], vertices[j]));
      // Gradient of D_R(., z) is log x - log z; its dual (l_inf) norm over
      // the mixed set is maximized at vertex pairs as well.
      const double g = (vertices[i].array().log() -
                        vertices[j].array().log())
                           .abs()
                           .maxCoeff();
      out.divergence_lipschitz = std::max(out.divergence_lipschitz, g);
    }
  }
  return out;
}

double max_strong_convexity_violation(const MirrorMap& map,
                                      const FeasibleSet& set, int pairs,
                                      RandomStream& stream) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < pairs; ++s) {
    const Vector x = set.sample(stream);
    const Vector y = set.sample(stream);
    const double gap = map.norm(x - y);
    worst = std::max(worst, 0.5 * gap * gap - bregman(map, x, y));
  }
  return worst;
}

double max_separate_convexity_violation(const MirrorMap& map,
                                        const FeasibleSet& set, int samples,
                                        RandomStream& stream) {
  double worst = -std::numeric_limits<double>::infinity();
  constexpr int kMixture = 3;
  for (int s = 0; s < samples; ++s) {
    const Vector x = set.sample(stream);
    Vector alpha(kMixture);
    for (int m = 0; m < kMixture; ++m) {
      alpha[m] = -std::log(1.0 - stream.uniform01());
    }
    alpha /= alpha.sum();
    Vector combined = Vector::Zero(set.dimension());
    double rhs = 0.0;
    for (int m = 0; m < kMixture; ++m) {
      const Vector y = set.sample(stream);
      combined += alpha[m] * y;
      rhs += alpha[m] * bregman(map, x, y);
    }
    worst = std::max(worst, bregman(map, x, combined) - rhs);
  }
  return worst;
}

}  // namespace dmtrack
