#include "dmtrack/dynamics.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

#include "dmtrack/csv.hpp"

namespace dmtrack {

LinearDynamics make_dynamics(Matrix a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("dynamics matrix must be square and nonempty");
  }
  if (!a.allFinite()) {
    throw std::invalid_argument("dynamics matrix has non-finite entries");
  }
  LinearDynamics dyn;
  dyn.spectral_norm = Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
  dyn.non_expansive = dyn.spectral_norm <= 1.0 + 1e-12;
  dyn.a = std::move(a);
  return dyn;
}

LinearDynamics identity_dynamics(int dimension) {
  return make_dynamics(Matrix::Identity(dimension, dimension));
}

LinearDynamics ncv_dynamics(double epsilon) {
  if (epsilon < 0.0) {
    throw std::invalid_argument("sampling interval must be >= 0");
  }
  Matrix a = Matrix::Identity(4, 4);
  a(0, 1) = epsilon;
  a(2, 3) = epsilon;
  return make_dynamics(std::move(a));
}

NoiseProcess NoiseProcess::zero() { return NoiseProcess{}; }

NoiseProcess NoiseProcess::scripted_sequence(std::vector<Vector> noises) {
  NoiseProcess p;
  p.kind = Kind::kScripted;
  p.scripted = std::move(noises);
  return p;
}

NoiseProcess NoiseProcess::ncv_scaled(double sigma_nu2, double epsilon) {
  if (sigma_nu2 < 0.0) throw std::invalid_argument("sigma_nu2 must be >= 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  NoiseProcess p;
  p.kind = Kind::kNcvScaled;
  p.sigma_nu2 = sigma_nu2;
  p.epsilon = epsilon;
  return p;
}

NoiseProcess NoiseProcess::custom_generator(
    std::function<Vector(int, RandomStream&)> generator) {
  NoiseProcess p;
  p.kind = Kind::kCustom;
  p.custom = std::move(generator);
  return p;
}

Vector ncv_raw_draw(double sigma_nu2, double epsilon, RandomStream& stream) {
  if (sigma_nu2 < 0.0) throw std::invalid_argument("sigma_nu2 must be >= 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  // Cholesky of [[e^3/3, e^2/2], [e^2/2, e]]:
  //   [[e*sqrt(e)/sqrt(3), 0], [sqrt(3)*sqrt(e)/2, sqrt(e)/2]]
  const double root_eps = std::sqrt(epsilon);
  const double l11 = epsilon * root_eps / std::sqrt(3.0);
  const double l21 = std::sqrt(3.0) * root_eps / 2.0;
  const double l22 = root_eps / 2.0;
  const double scale = std::sqrt(sigma_nu2);
  Vector nu(4);
  for (int axis = 0; axis < 2; ++axis) {
    const double z1 = stream.normal();
    const double z2 = stream.normal();
    nu[2 * axis] = scale * l11 * z1;
    nu[2 * axis + 1] = scale * (l21 * z1 + l22 * z2);
  }
  return nu;
}

Vector ncv_noise_step(double sigma_nu2, double epsilon, RandomStream& stream) {
  const Vector nu = ncv_raw_draw(sigma_nu2, epsilon, stream);
  return nu * nu.lpNorm<Eigen::Infinity>();
}

double TargetTrajectory::reconstruction_residual() const {
  double worst = 0.0;
  for (int t = 0; t < rounds(); ++t) {
    const Vector predicted = dynamics.a * states[t] + noises[t];
    worst = std::max(worst,
                     (states[t + 1] - predicted).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

TargetTrajectory generate_trajectory(const LinearDynamics& dynamics,
                                     const Vector& start,
                                     const NoiseProcess& noise, int rounds,
                                     std::uint64_t seed) {
  const int d = dynamics.dimension();
  if (start.size() != d) {
    throw std::invalid_argument("start state dimension mismatch");
  }
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (noise.kind == NoiseProcess::Kind::kScripted &&
      static_cast<int>(noise.scripted.size()) < rounds) {
    throw std::invalid_argument(
        "scripted noise sequence is shorter than the horizon (" +
        std::to_string(noise.scripted.size()) + " < " +
        std::to_string(rounds) + ")");
  }
  if (noise.kind == NoiseProcess::Kind::kNcvScaled && d != 4) {
    throw std::invalid_argument("ncv-scaled noise requires dimension 4");
  }

  TargetTrajectory traj;
  traj.dynamics = dynamics;
  traj.states.reserve(rounds + 1);
  traj.noises.reserve(rounds);
  traj.states.push_back(start);
  for (int t = 1; t <= rounds; ++t) {
    Vector v;
    switch (noise.kind) {
      case NoiseProcess::Kind::kZero:
        v = Vector::Zero(d);
        break;
      case NoiseProcess::Kind::kScripted:
        v = noise.scripted[t - 1];
        if (v.size() != d) {
          throw std::invalid_argument("scripted noise dimension mismatch");
        }
        break;
      case NoiseProcess::Kind::kNcvScaled: {
        RandomStream stream(
            derive_stream_key(seed, StreamPurpose::kTrajectoryNoise, 0, t));
        v = ncv_noise_step(noise.sigma_nu2, noise.epsilon, stream);
        break;
      }
      case NoiseProcess::Kind::kCustom: {
        RandomStream stream(
            derive_stream_key(seed, StreamPurpose::kTrajectoryNoise, 0, t));
        v = noise.custom(t, stream);
        if (v.size() != d) {
          throw std::invalid_argument("custom noise dimension mismatch");
        }
        break;
      }
    }
    traj.states.push_back(dynamics.a * traj.states.back() + v);
    traj.noises.push_back(std::move(v));
  }
  return traj;
}

double path_length(const TargetTrajectory& trajectory, Norm norm) {
  double total = 0.0;
  for (const Vector& v : trajectory.noises) total += vector_norm(v, norm);
  return total;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const TargetTrajectory& trajectory) {
  const int d = trajectory.dimension();
  std::string content = "t";
  for (int k = 1; k <= d; ++k) content += ",x" + std::to_string(k);
  for (int k = 1; k <= d; ++k) content += ",v" + std::to_string(k);
  content += "\n";
  for (std::size_t t = 0; t < trajectory.states.size(); ++t) {
    content += std::to_string(t + 1);
    for (int k = 0; k < d; ++k) {
      content += "," + format_g17(trajectory.states[t][k]);
    }
    for (int k = 0; k < d; ++k) {
      const double v =
          t < trajectory.noises.size() ? trajectory.noises[t][k] : 0.0;
      content += "," + format_g17(v);
    }
    content += "\n";
  }
  atomic_write_file(path, content);
}

TargetTrajectory read_trajectory_csv(const std::filesystem::path& path,
                                     const LinearDynamics& dynamics) {
  const CsvTable table = read_csv(path);
  const int d = dynamics.dimension();
  if (static_cast<int>(table.header.size()) != 1 + 2 * d) {
    throw std::runtime_error("trajectory csv '" + path.string() +
                             "' does not match dimension " +
                             std::to_string(d));
  }
  if (table.rows.size() < 2) {
    throw std::runtime_error("trajectory csv '" + path.string() +
                             "' needs at least two state rows");
  }
  TargetTrajectory traj;
  traj.dynamics = dynamics;
  const int total_rows = static_cast<int>(table.rows.size());
  for (int r = 0; r < total_rows; ++r) {
    const auto& row = table.rows[r];
    Vector x(d), v(d);
    for (int k = 0; k < d; ++k) x[k] = parse_double(row[1 + k]);
    for (int k = 0; k < d; ++k) v[k] = parse_double(row[1 + d + k]);
    traj.states.push_back(std::move(x));
    if (r + 1 < total_rows) traj.noises.push_back(std::move(v));
  }
  if (traj.reconstruction_residual() > 1e-12) {
    throw std::runtime_error("trajectory csv '" + path.string() +
                             "' violates the dynamics recurrence");
  }
  return traj;
}

}  // namespace dmtrack
