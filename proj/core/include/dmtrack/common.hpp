#pragma once

#include <Eigen/Core>

namespace dmtrack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Norm families used by the mirror geometries (l2 for the Euclidean map,
/// l1 for the negative-entropy map).
enum class Norm { kL2, kL1 };

inline double vector_norm(const Vector& v, Norm norm) {
  return norm == Norm::kL2 ? v.norm() : v.lpNorm<1>();
}

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dmtrack
