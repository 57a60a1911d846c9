#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dmtrack/common.hpp"

namespace dmtrack {

/// Undirected agent graph. Edges are stored with i < j, deduplicated, no
/// self-loops.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> adjacency;  // sorted neighbor lists

  int degree(int node) const { return static_cast<int>(adjacency[node].size()); }
  bool connected() const;  // breadth-first reachability from node 0
};

Graph grid_graph(int rows, int cols);  // 4-neighbor lattice
Graph complete_graph(int n);
Graph ring_graph(int n);
Graph path_graph(int n);
Graph graph_from_edges(int n, std::vector<std::pair<int, int>> edges);

/// Plain-text edge list, one "i j" pair per line, 0-indexed. Node count is
/// max index + 1. Malformed lines, self-loops and negative indices are
/// rejected.
Graph read_edge_list(const std::filesystem::path& path);

/// Consensus weights: symmetric, doubly stochastic, positive diagonal, with
/// the second-largest eigenvalue magnitude cached.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(Matrix w, double sigma2) : w_(std::move(w)), sigma2_(sigma2) {}

  const Matrix& matrix() const { return w_; }
  double sigma2() const { return sigma2_; }
  int size() const { return static_cast<int>(w_.rows()); }

 private:
  Matrix w_;
  double sigma2_ = 0.0;
};

/// Metropolis weights w_ij = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal
/// absorbing the remainder. Throws on a disconnected graph.
WeightMatrix metropolis_weights(const Graph& g);

/// (1/n) * ones: the complete-graph averaging matrix, sigma2 = 0 exactly.
WeightMatrix uniform_complete_weights(int n);

/// Second-largest eigenvalue magnitude via full symmetric eigendecomposition.
double sigma2_exact(const Matrix& w);

/// Same quantity via power iteration on the square of the mean-deflated
/// matrix; used above the exact-solver size cutoff.
double sigma2_power(const Matrix& w, double tol = 1e-12,
                    int max_iterations = 100000);

/// Dispatches to sigma2_exact for n <= 512 and sigma2_power above.
double second_eigenvalue_magnitude(const Matrix& w);

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double residual = 0.0;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass() const;
  std::string to_string() const;
};

/// Report-style validation of the weight-matrix invariants: symmetry, double
/// stochasticity, nonnegativity, positive diagonal, sparsity pattern within
/// the graph adjacency, connectivity, and sigma2 < 1.
ValidationReport validate_weights(const Matrix& w, const Graph& g);

}  // namespace dmtrack
