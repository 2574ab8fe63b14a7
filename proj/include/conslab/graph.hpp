#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace conslab {

// Raised when an iterative procedure fails to produce a usable result
// (generation retries exhausted, iteration did not converge, ...).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Undirected simple graph on nodes 0..n-1. Immutable after construction,
// safe to share across threads.
class Graph {
 public:
  // Edges may be given in any order/orientation; loops and duplicates are
  // rejected.
  Graph(int n, std::vector<std::pair<int, int>> edges);

  static Graph complete(int n);
  static Graph path(int n);
  static Graph cycle(int n);
  static Graph star(int n);  // node 0 is the hub
  // Triangle {0,1,3} with a pendant node 2 attached to node 0. The smallest
  // graph where grounding node 0 leaves the algebraic connectivity unchanged.
  static Graph paw();

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const;
  int degree(int i) const;
  bool has_edge(int i, int j) const;
  int max_degree() const;
  // d if every node has degree d, nullopt otherwise.
  std::optional<int> regular_degree() const;
  bool is_connected() const;  // BFS from node 0

  Eigen::MatrixXd adjacency() const;

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;   // normalized (i < j), sorted
  std::vector<std::vector<int>> adj_;        // sorted neighbor lists
};

// Combinatorial Laplacian: diagonal = degrees, off-diagonal = -adjacency.
Eigen::MatrixXd laplacian(const Graph& g);

struct RegularGraphOptions {
  int max_attempts = 2000;
};

// Random d-regular simple connected graph via stub matching: each node gets d
// stubs, stubs are paired uniformly at random skipping loops/duplicate edges,
// and the whole attempt restarts on a dead end or a disconnected sample.
// Deterministic for a fixed seed.
Graph random_regular(int n, int d, std::uint64_t seed,
                     const RegularGraphOptions& opts = {});

enum class CheegerMode { kExact, kBounds };

struct CheegerEstimate {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> exact;
  CheegerMode method = CheegerMode::kBounds;
  std::vector<int> min_subset;  // a minimizing X (exact mode only)
};

struct CheegerOptions {
  int exact_max_nodes = 20;
};

// Isoperimetric constant h = min |boundary(X)| / |X| over X with |X| <= n/2.
// Exact mode enumerates the 2^(n-1) vertex bipartitions (subsets containing a
// fixed pivot); bounds mode inverts the Cheeger inequality
// h^2/(2 d_max) <= lambda_2 <= 2h into [lambda_2/2, sqrt(2 d_max lambda_2)].
CheegerEstimate cheeger(const Graph& g, CheegerMode mode,
                        const CheegerOptions& opts = {});

// Principal submatrix of the Laplacian with the grounded rows/columns
// removed, plus the coupling back into the grounded set.
struct GroundedLaplacian {
  Eigen::MatrixXd lbar;             // (N-m) x (N-m)
  Eigen::VectorXd coupling;         // per kept node: #edges into the grounded set
  Eigen::MatrixXd coupling_matrix;  // (N-m) x m, adjacency(kept i, grounded j)
  std::vector<int> kept;            // original ids, ascending
  std::vector<int> grounded;        // original ids, ascending
};

GroundedLaplacian ground(const Graph& g, const std::vector<int>& s);

// Edge-list text format: first line "N M", then M lines "i j" (1-indexed);
// '#' starts a comment.
Graph read_edge_list(std::istream& in);
void write_edge_list(const Graph& g, std::ostream& out);

// A grounding set is one line of 1-indexed node ids.
std::vector<int> read_grounding_set(std::istream& in, int node_count);
void write_grounding_set(const std::vector<int>& s, std::ostream& out);

}  // namespace conslab
