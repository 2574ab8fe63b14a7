#pragma once

// Test-only oracles, kept independent of the library implementation paths
// they are used to check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "conslab/graph.hpp"

namespace oracle {

// Eigenvalues through a completely different route than the symmetric
// eigensolver: characteristic polynomial coefficients via Faddeev-LeVerrier,
// roots via the companion matrix and the general (non-selfadjoint)
// eigensolver. Only sane for small n.
inline std::vector<double> charpoly_eigenvalues(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  // p(x) = x^n + c[0] x^(n-1) + ... + c[n-1]
  std::vector<double> c(n);
  Eigen::MatrixXd mk = m;
  for (int k = 1; k <= n; ++k) {
    c[k - 1] = -mk.trace() / k;
    if (k < n)
      mk = m * (mk + c[k - 1] * Eigen::MatrixXd::Identity(n, n));
  }
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -c[n - 1 - i];
  const Eigen::VectorXcd roots = Eigen::EigenSolver<Eigen::MatrixXd>(companion)
                                     .eigenvalues();
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) values[i] = roots(i).real();
  std::sort(values.begin(), values.end());
  return values;
}

// Plain subset scan for the isoperimetric constant: every X with
// 1 <= |X| <= n/2, no pivot trick, no bitmask popcounts over neighbor rows.
inline double naive_cheeger(const conslab::Graph& g) {
  const int n = g.node_count();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    int size = 0;
    for (int v = 0; v < n; ++v)
      if (mask & (1u << v)) ++size;
    if (2 * size > n) continue;
    int boundary = 0;
    for (auto [a, b] : g.edges()) {
      const bool ina = mask & (1u << a);
      const bool inb = mask & (1u << b);
      if (ina != inb) ++boundary;
    }
    best = std::min(best, static_cast<double>(boundary) / size);
  }
  return best;
}

// Uniform-ish random connected graph: sample edges independently, retry
// until connected.
inline conslab::Graph random_connected(int n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 2000; ++attempt) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (unit(rng) < p) edges.emplace_back(i, j);
    conslab::Graph g(n, std::move(edges));
    if (g.is_connected()) return g;
  }
  throw std::runtime_error("random_connected: retries exhausted");
}

}  // namespace oracle
