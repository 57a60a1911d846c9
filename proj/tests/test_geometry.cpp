#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dmtrack/geometry.hpp"
#include "dmtrack/rng.hpp"

using namespace dmtrack;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Independent divergence oracle: evaluates the definition
// R(x) - R(y) - <x - y, grad R(y)> with its own R and grad R.
double divergence_oracle(MirrorMapKind kind, const Vector& x,
                         const Vector& y) {
  auto r = [kind](const Vector& v) {
    if (kind == MirrorMapKind::kEuclidean) return 0.5 * v.squaredNorm();
    double acc = 0.0;
    for (int k = 0; k < v.size(); ++k) acc += v[k] * std::log(v[k]) - v[k];
    return acc;
  };
  auto grad = [kind](const Vector& v) -> Vector {
    if (kind == MirrorMapKind::kEuclidean) return v;
    return v.array().log().matrix();
  };
  return r(x) - r(y) - (x - y).dot(grad(y));
}

// Grid search over the 1-simplex followed by a ternary-search refinement;
// deliberately independent of mirror_step.
Vector kl_argmin_oracle_2d(const Vector& y, const Vector& g, double eta) {
  MirrorMap map = negative_entropy_map(2);
  auto objective = [&](double p) {
    Vector x = vec2(p, 1.0 - p);
    return eta * x.dot(g) + bregman(map, x, y);
  };
  double best_p = 0.5;
  double best_value = objective(best_p);
  const int cells = 10000;
  for (int i = 1; i < cells; ++i) {
    const double p = static_cast<double>(i) / cells;
    const double value = objective(p);
    if (value < best_value) {
      best_value = value;
      best_p = p;
    }
  }
  double lo = std::max(1e-12, best_p - 2.0 / cells);
  double hi = std::min(1.0 - 1e-12, best_p + 2.0 / cells);
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (objective(m1) < objective(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double p = 0.5 * (lo + hi);
  return vec2(p, 1.0 - p);
}

}  // namespace

TEST_CASE("euclidean divergence basics") {
  MirrorMap map = euclidean_map(2);
  CHECK(bregman(map, vec2(0.3, 0.7), vec2(0.3, 0.7)) == doctest::Approx(0.0));
  CHECK(bregman(map, vec2(1, 0), vec2(0, 0)) == doctest::Approx(0.5));
}

TEST_CASE("kl divergence matches the definitional oracle") {
  MirrorMap map = negative_entropy_map(2);
  const Vector x = vec2(0.5, 0.5);
  const Vector y = vec2(0.25, 0.75);
  const double value = bregman(map, x, y);
  CHECK(value ==
        doctest::Approx(divergence_oracle(MirrorMapKind::kNegativeEntropy, x, y))
            .epsilon(1e-12));
  CHECK(value == doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-12));

  // Same identity holds for random interior pairs.
  RandomStream stream(11);
  FeasibleSet simplex = FeasibleSet::simplex(4, 0.05);
  MirrorMap map4 = negative_entropy_map(4);
  for (int s = 0; s < 100; ++s) {
    const Vector a = simplex.sample(stream);
    const Vector b = simplex.sample(stream);
    CHECK(bregman(map4, a, b) ==
          doctest::Approx(
              divergence_oracle(MirrorMapKind::kNegativeEntropy, a, b))
              .epsilon(1e-10));
  }
}

TEST_CASE("kl divergence rejects nonpositive coordinates") {
  MirrorMap map = negative_entropy_map(2);
  CHECK_THROWS_AS(bregman(map, vec2(0.0, 1.0), vec2(0.5, 0.5)),
                  std::invalid_argument);
  CHECK_THROWS_AS(bregman(map, vec2(0.5, 0.5), vec2(-0.1, 1.1)),
                  std::invalid_argument);
}

TEST_CASE("mirror step closed forms") {
  MirrorMap map = euclidean_map(2);

  SUBCASE("unconstrained step is exactly y - eta g") {
    FeasibleSet space = FeasibleSet::whole_space(2);
    const Vector out = mirror_step(map, space, vec2(0.5, 0.5), vec2(1, 0), 0.1);
    CHECK(out[0] == 0.4);  // exact: closed form, no projection
    CHECK(out[1] == 0.5);

    RandomStream stream(3);
    for (int s = 0; s < 50; ++s) {
      const Vector y = vec2(stream.uniform(-5, 5), stream.uniform(-5, 5));
      const Vector g = vec2(stream.uniform(-3, 3), stream.uniform(-3, 3));
      const double eta = stream.uniform(0.01, 2.0);
      const Vector expected = y - eta * g;
      CHECK((mirror_step(map, space, y, g, eta) - expected).norm() == 0.0);
    }
  }

  SUBCASE("box step clamps at the boundary") {
    FeasibleSet box = FeasibleSet::box(vec2(0, 0), vec2(1, 1));
    const Vector out =
        mirror_step(map, box, vec2(0.05, 0.5), vec2(1, 0), 0.1);
    CHECK(out[0] == doctest::Approx(0.0));
    CHECK(out[1] == doctest::Approx(0.5));
  }

  SUBCASE("multiplicative simplex step") {
    MirrorMap kl = negative_entropy_map(2);
    FeasibleSet simplex = FeasibleSet::simplex(2);
    const Vector g = vec2(std::log(2.0), 0.0);
    const Vector out = mirror_step(kl, simplex, vec2(0.5, 0.5), g, 1.0);
    CHECK(out[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    const Vector oracle = kl_argmin_oracle_2d(vec2(0.5, 0.5), g, 1.0);
    CHECK((out - oracle).lpNorm<Eigen::Infinity>() <= 1e-6);
  }

  SUBCASE("rejected inputs") {
    MirrorMap kl = negative_entropy_map(2);
    FeasibleSet box = FeasibleSet::box(vec2(0, 0), vec2(1, 1));
    CHECK_THROWS_AS(mirror_step(kl, box, vec2(0.5, 0.5), vec2(0, 0), 0.1),
                    std::invalid_argument);
    FeasibleSet space = FeasibleSet::whole_space(2);
    Vector bad = vec2(std::nan(""), 0.0);
    CHECK_THROWS_AS(mirror_step(map, space, vec2(0, 0), bad, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(mirror_step(map, space, vec2(0, 0), vec2(1, 0), 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("mirror step beats sampled feasible points") {
  RandomStream stream(17);
  auto check_optimality = [&](const MirrorMap& map, const FeasibleSet& set) {
    for (int instance = 0; instance < 20; ++instance) {
      const Vector y = set.sample(stream);
      Vector g(set.dimension());
      for (int k = 0; k < g.size(); ++k) g[k] = stream.uniform(-2, 2);
      const double eta = stream.uniform(0.05, 1.0);
      const Vector out = mirror_step(map, set, y, g, eta);
      const double best = eta * out.dot(g) + bregman(map, out, y);
      for (int probe = 0; probe < 200; ++probe) {
        const Vector candidate = set.sample(stream);
        const double value = eta * candidate.dot(g) + bregman(map, candidate, y);
        CHECK(best <= value + 1e-8);
      }
    }
  };
  check_optimality(euclidean_map(3),
                   FeasibleSet::box(Vector::Zero(3), Vector::Ones(3)));
  check_optimality(euclidean_map(3), FeasibleSet::ball(Vector::Zero(3), 1.5));
  check_optimality(euclidean_map(3), FeasibleSet::simplex(3));
  check_optimality(negative_entropy_map(3), FeasibleSet::simplex(3));
}

TEST_CASE("divergence constants") {
  SUBCASE("euclidean closed forms") {
    MirrorMap map = euclidean_map(2);
    const auto ball = constants_of(map, FeasibleSet::ball(vec2(0, 0), 1.0));
    CHECK(ball.rsq == doctest::Approx(2.0));
    CHECK(ball.divergence_lipschitz == doctest::Approx(2.0));

    MirrorMap map1 = euclidean_map(1);
    Vector lo(1), hi(1);
    lo << 0.0;
    hi << 1.0;
    const auto box = constants_of(map1, FeasibleSet::box(lo, hi));
    CHECK(box.rsq == doctest::Approx(0.5));
    CHECK(box.divergence_lipschitz == doctest::Approx(1.0));
  }

  SUBCASE("whole space is rejected") {
    CHECK_THROWS_AS(constants_of(euclidean_map(2), FeasibleSet::whole_space(2)),
                    std::domain_error);
  }

  SUBCASE("mixed-simplex constants match a grid-sample oracle") {
    MirrorMap map = negative_entropy_map(2);
    FeasibleSet simplex = FeasibleSet::simplex(2, 0.1);
    const auto constants = constants_of(map, simplex);

    RandomStream stream(23);
    double sampled_sup = 0.0;
    for (int s = 0; s < 10000; ++s) {
      const Vector x = simplex.sample(stream);
      const Vector y = simplex.sample(stream);
      sampled_sup = std::max(sampled_sup, bregman(map, x, y));
    }
    CHECK(sampled_sup <= constants.rsq * (1 + 1e-12));
    CHECK(sampled_sup >= 0.95 * constants.rsq);

    // K dominates sampled difference quotients of the first argument.
    for (int s = 0; s < 2000; ++s) {
      const Vector x = simplex.sample(stream);
      const Vector y = simplex.sample(stream);
      const Vector z = simplex.sample(stream);
      const double lhs = std::abs(bregman(map, x, z) - bregman(map, y, z));
      const double gap = (x - y).lpNorm<1>();
      if (gap > 1e-12) {
        CHECK(lhs <= constants.divergence_lipschitz * gap + 1e-9);
      }
    }
  }
}

TEST_CASE("strong convexity probe at ten thousand pairs") {
  RandomStream stream(29);
  MirrorMap euclid = euclidean_map(3);
  FeasibleSet ball = FeasibleSet::ball(Vector::Zero(3), 2.0);
  CHECK(max_strong_convexity_violation(euclid, ball, 10000, stream) <= 1e-9);

  MirrorMap kl = negative_entropy_map(4);
  FeasibleSet simplex = FeasibleSet::simplex(4);
  CHECK(max_strong_convexity_violation(kl, simplex, 10000, stream) <= 1e-9);
}

TEST_CASE("separate convexity probe at ten thousand samples") {
  RandomStream stream(31);
  MirrorMap euclid = euclidean_map(3);
  FeasibleSet box = FeasibleSet::box(Vector::Constant(3, -1), Vector::Ones(3));
  CHECK(max_separate_convexity_violation(euclid, box, 10000, stream) <= 1e-9);

  MirrorMap kl = negative_entropy_map(3);
  FeasibleSet simplex = FeasibleSet::simplex(3);
  CHECK(max_separate_convexity_violation(kl, simplex, 10000, stream) <= 1e-9);
}

TEST_CASE("generator gradient agrees with finite differences") {
  RandomStream stream(37);
  const double h = 1e-6;
  auto check_map = [&](const MirrorMap& map, const FeasibleSet& set) {
    for (int s = 0; s < 50; ++s) {
      const Vector x = set.sample(stream);
      const Vector g = map.generator_gradient(x);
      for (int k = 0; k < x.size(); ++k) {
        Vector up = x, down = x;
        up[k] += h;
        down[k] -= h;
        const double fd = (map.generator(up) - map.generator(down)) / (2 * h);
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  };
  check_map(euclidean_map(3),
            FeasibleSet::box(Vector::Constant(3, -2), Vector::Constant(3, 2)));
  check_map(negative_entropy_map(3), FeasibleSet::simplex(3, 0.2));
}

TEST_CASE("projections land in the set and fix interior points") {
  RandomStream stream(41);
  FeasibleSet ball = FeasibleSet::ball(vec2(1, -1), 0.5);
  FeasibleSet box = FeasibleSet::box(vec2(-1, -1), vec2(1, 1));
  FeasibleSet simplex = FeasibleSet::simplex(2);
  for (int s = 0; s < 200; ++s) {
    const Vector x = vec2(stream.uniform(-3, 3), stream.uniform(-3, 3));
    CHECK(ball.contains(ball.project(x), 1e-12));
    CHECK(box.contains(box.project(x), 1e-12));
    CHECK(simplex.contains(simplex.project(x), 1e-12));
  }
  const Vector inside = vec2(0.25, 0.75);
  CHECK((simplex.project(inside) - inside).norm() == doctest::Approx(0.0));
  CHECK(simplex.centroid()[0] == doctest::Approx(0.5));
}
