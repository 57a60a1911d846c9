#include "dmtrack/network.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dmtrack/rng.hpp"

namespace dmtrack {
namespace {

Graph finalize(int n, std::set<std::pair<int, int>> unique_edges) {
  Graph g;
  g.n = n;
  g.edges.assign(unique_edges.begin(), unique_edges.end());
  g.adjacency.assign(n, {});
  for (const auto& [i, j] : g.edges) {
    g.adjacency[i].push_back(j);
    g.adjacency[j].push_back(i);
  }
  for (auto& nbrs : g.adjacency) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

}  // namespace

bool Graph::connected() const {
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        queue.push_back(v);
      }
    }
  }
  return reached == n;
}

Graph grid_graph(int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("grid dimensions must be >= 1");
  }
  std::set<std::pair<int, int>> edges;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.emplace(id(r, c), id(r, c + 1));
      if (r + 1 < rows) edges.emplace(id(r, c), id(r + 1, c));
    }
  }
  return finalize(rows * cols, std::move(edges));
}

Graph complete_graph(int n) {
  if (n < 1) throw std::invalid_argument("graph needs at least one node");
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.emplace(i, j);
  }
  return finalize(n, std::move(edges));
}

Graph ring_graph(int n) {
  if (n < 1) throw std::invalid_argument("graph needs at least one node");
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < n && n > 1; ++i) {
    const int j = (i + 1) % n;
    edges.emplace(std::min(i, j), std::max(i, j));
  }
  return finalize(n, std::move(edges));
}

Graph path_graph(int n) {
  if (n < 1) throw std::invalid_argument("graph needs at least one node");
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace(i, i + 1);
  return finalize(n, std::move(edges));
}

Graph graph_from_edges(int n, std::vector<std::pair<int, int>> edges) {
  if (n < 1) throw std::invalid_argument("graph needs at least one node");
  std::set<std::pair<int, int>> unique_edges;
  for (auto [i, j] : edges) {
    if (i == j) throw std::invalid_argument("self-loops are not allowed");
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw std::invalid_argument("edge index out of range: (" +
                                  std::to_string(i) + ", " + std::to_string(j) +
                                  ")");
    }
    unique_edges.emplace(std::min(i, j), std::max(i, j));
  }
  return finalize(n, std::move(unique_edges));
}

Graph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open edge list '" + path.string() + "'");
  }
  std::vector<std::pair<int, int>> edges;
  int max_node = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    long long i = -1, j = -1;
    std::string extra;
    if (!(ss >> i >> j) || (ss >> extra) || i < 0 || j < 0) {
      throw std::runtime_error("malformed edge list line " +
                               std::to_string(line_no) + " in '" +
                               path.string() + "'");
    }
    edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    max_node = std::max<long long>(max_node, std::max(i, j));
  }
  if (edges.empty()) {
    throw std::runtime_error("edge list '" + path.string() + "' is empty");
  }
  return graph_from_edges(static_cast<int>(max_node) + 1, std::move(edges));
}

WeightMatrix metropolis_weights(const Graph& g) {
  if (g.n < 1) throw std::invalid_argument("empty graph");
  if (!g.connected()) {
    throw std::invalid_argument(
        "metropolis_weights: graph is disconnected; consensus requires a path "
        "between every pair of agents");
  }
  Matrix w = Matrix::Zero(g.n, g.n);
  for (const auto& [i, j] : g.edges) {
    const double value = 1.0 / (1.0 + std::max(g.degree(i), g.degree(j)));
    w(i, j) = value;
    w(j, i) = value;
  }
  for (int i = 0; i < g.n; ++i) {
    w(i, i) = 1.0 - w.row(i).sum();
  }
  const double s2 = second_eigenvalue_magnitude(w);
  return WeightMatrix(std::move(w), s2);
}

WeightMatrix uniform_complete_weights(int n) {
  if (n < 1) throw std::invalid_argument("weight matrix needs n >= 1");
  Matrix w = Matrix::Constant(n, n, 1.0 / n);
  return WeightMatrix(std::move(w), 0.0);
}

double sigma2_exact(const Matrix& w) {
  const int n = static_cast<int>(w.rows());
  if (n <= 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(w, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();  // ascending
  return std::max(std::abs(ev(0)), std::abs(ev(n - 2)));
}

double sigma2_power(const Matrix& w, double tol, int max_iterations) {
  const int n = static_cast<int>(w.rows());
  if (n <= 1) return 0.0;
  // Deflate the top eigenpair (eigenvalue 1, uniform vector) and iterate on
  // the square of the remainder so +/- eigenvalue pairs cannot stall the
  // iteration: the dominant eigenvalue of b^2 is sigma2^2.
  const Matrix b = w - Matrix::Constant(n, n, 1.0 / n);
  RandomStream stream(0x5eedULL);
  Vector v(n);
  for (int k = 0; k < n; ++k) v[k] = stream.uniform(-1.0, 1.0);
  v -= Vector::Constant(n, v.mean());
  if (v.norm() == 0.0) v[0] = 1.0;
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Vector next = b * (b * v);
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    next /= norm;
    const double estimate = next.dot(b * (b * next));
    if (std::abs(estimate - lambda) <= tol * std::max(1.0, std::abs(estimate))) {
      lambda = estimate;
      break;
    }
    lambda = estimate;
    v = std::move(next);
  }
  return std::sqrt(std::max(lambda, 0.0));
}

double second_eigenvalue_magnitude(const Matrix& w) {
  return w.rows() <= 512 ? sigma2_exact(w) : sigma2_power(w);
}

bool ValidationReport::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

std::string ValidationReport::to_string() const {
  std::string out;
  for (const auto& c : checks) {
    out += (c.pass ? "pass " : "FAIL ") + c.name + " (residual " +
           std::to_string(c.residual) + ")\n";
  }
  return out;
}

ValidationReport validate_weights(const Matrix& w, const Graph& g) {
  ValidationReport report;
  const int n = static_cast<int>(w.rows());
  auto add = [&report](std::string name, bool pass, double residual) {
    report.checks.push_back({std::move(name), pass, residual});
  };

  if (n != g.n || w.cols() != n) {
    add("shape", false, std::abs(n - g.n));
    return report;
  }

  const double asym = (w - w.transpose()).cwiseAbs().maxCoeff();
  add("symmetric", asym <= 1e-12, asym);

  const double row_defect =
      (w.rowwise().sum() - Vector::Ones(n)).cwiseAbs().maxCoeff();
  add("row sums", row_defect <= 1e-10, row_defect);
  const double col_defect =
      (w.colwise().sum().transpose() - Vector::Ones(n)).cwiseAbs().maxCoeff();
  add("column sums", col_defect <= 1e-10, col_defect);

  const double negativity = std::max(0.0, -w.minCoeff());
  add("nonnegative entries", negativity == 0.0, negativity);

  const double min_diag = w.diagonal().minCoeff();
  add("positive diagonal", min_diag > 0.0, min_diag);

  double off_pattern = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool adjacent = std::binary_search(g.adjacency[i].begin(),
                                               g.adjacency[i].end(), j);
      if (!adjacent) off_pattern = std::max(off_pattern, std::abs(w(i, j)));
    }
  }
  add("sparsity within adjacency", off_pattern == 0.0, off_pattern);

  const bool connected = g.connected();
  add("connected", connected, connected ? 0.0 : 1.0);

  if (connected) {
    const double s2 = second_eigenvalue_magnitude(w);
    add("sigma2 < 1", s2 < 1.0, s2);
  }
  return report;
}

}  // namespace dmtrack
