#include "conslab/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace conslab {

Graph::Graph(int n, std::vector<std::pair<int, int>> edges) : n_(n) {
  if (n <= 0) throw std::invalid_argument("Graph: node count must be positive");
  edges_.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw std::invalid_argument("Graph: edge endpoint out of range");
    if (a == b) throw std::invalid_argument("Graph: self-loop rejected");
    if (a > b) std::swap(a, b);
    edges_.emplace_back(a, b);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw std::invalid_argument("Graph: duplicate edge rejected");
  adj_.assign(n_, {});
  for (auto [a, b] : edges_) {
    adj_[a].push_back(b);
    adj_[b].push_back(a);
  }
  for (auto& list : adj_) std::sort(list.begin(), list.end());
}

Graph Graph::complete(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph(n, std::move(e));
}

Graph Graph::path(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph(n, std::move(e));
}

Graph Graph::cycle(int n) {
  if (n < 3) throw std::invalid_argument("cycle: need at least 3 nodes");
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return Graph(n, std::move(e));
}

Graph Graph::star(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n; ++i) e.emplace_back(0, i);
  return Graph(n, std::move(e));
}

Graph Graph::paw() { return Graph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 3}}); }

const std::vector<int>& Graph::neighbors(int i) const {
  if (i < 0 || i >= n_) throw std::invalid_argument("neighbors: node out of range");
  return adj_[i];
}

int Graph::degree(int i) const { return static_cast<int>(neighbors(i).size()); }

bool Graph::has_edge(int i, int j) const {
  if (i == j) return false;
  const auto& list = neighbors(i);
  return std::binary_search(list.begin(), list.end(), j);
}

int Graph::max_degree() const {
  int d = 0;
  for (int i = 0; i < n_; ++i) d = std::max(d, degree(i));
  return d;
}

std::optional<int> Graph::regular_degree() const {
  const int d = degree(0);
  for (int i = 1; i < n_; ++i)
    if (degree(i) != d) return std::nullopt;
  return d;
}

bool Graph::is_connected() const {
  std::vector<char> seen(n_, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  int count = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : adj_[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        queue.push_back(w);
      }
    }
  }
  return count == n_;
}

Eigen::MatrixXd Graph::adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (auto [i, j] : edges_) {
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

Eigen::MatrixXd laplacian(const Graph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (auto [i, j] : g.edges()) {
    l(i, j) = -1.0;
    l(j, i) = -1.0;
    l(i, i) += 1.0;
    l(j, j) += 1.0;
  }
  return l;
}

Graph random_regular(int n, int d, std::uint64_t seed,
                     const RegularGraphOptions& opts) {
  if (n <= 0) throw std::invalid_argument("random_regular: n must be positive");
  if (d >= n) throw std::invalid_argument("random_regular: need d < n");
  if ((static_cast<long long>(n) * d) % 2 != 0)
    throw std::invalid_argument("random_regular: n*d must be even");
  if (n > 1 && d == 0)
    throw std::invalid_argument("random_regular: d = 0 cannot be connected");
  if (n == 1) return Graph(1, {});

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(n) * d);
    for (int v = 0; v < n; ++v)
      for (int k = 0; k < d; ++k) stubs.push_back(v);

    std::set<std::pair<int, int>> used;
    std::vector<std::pair<int, int>> edges;
    edges.reserve(stubs.size() / 2);
    bool dead_end = false;

    while (!stubs.empty()) {
      const int limit = 64 + 16 * static_cast<int>(stubs.size());
      bool matched = false;
      for (int t = 0; t < limit; ++t) {
        std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
        const std::size_t i = pick(rng);
        const std::size_t j = pick(rng);
        if (i == j) continue;
        int u = stubs[i], v = stubs[j];
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        if (used.count({u, v})) continue;
        used.insert({u, v});
        edges.emplace_back(u, v);
        // remove the larger index first so the smaller one stays valid
        const std::size_t hi = std::max(i, j), lo = std::min(i, j);
        stubs[hi] = stubs.back();
        stubs.pop_back();
        stubs[lo] = stubs.back();
        stubs.pop_back();
        matched = true;
        break;
      }
      if (!matched) {
        dead_end = true;
        break;
      }
    }
    if (dead_end) continue;
    Graph g(n, edges);
    if (g.is_connected()) return g;
  }
  throw NumericalError("random_regular: no connected simple sample within " +
                       std::to_string(opts.max_attempts) + " attempts");
}

namespace {

CheegerEstimate cheeger_exact(const Graph& g) {
  const int n = g.node_count();
  std::vector<std::uint32_t> nbr(n, 0);
  for (auto [i, j] : g.edges()) {
    nbr[i] |= (1u << j);
    nbr[j] |= (1u << i);
  }
  const std::uint32_t full = (1u << n) - 1u;

  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_side = 0;
  // every bipartition is visited once as the subset containing node 0
  const std::uint32_t limit = 1u << (n - 1);
  for (std::uint32_t rest = 0; rest < limit; ++rest) {
    const std::uint32_t s = (rest << 1) | 1u;
    if (s == full) continue;
    int cut = 0;
    for (int v = 0; v < n; ++v)
      if (s & (1u << v)) cut += std::popcount(nbr[v] & ~s);
    const int size_s = std::popcount(s);
    const int small = std::min(size_s, n - size_s);
    const double ratio = static_cast<double>(cut) / small;
    if (ratio < best) {
      best = ratio;
      best_side = (size_s <= n - size_s) ? s : (full & ~s);
    }
  }

  CheegerEstimate est;
  est.method = CheegerMode::kExact;
  est.exact = best;
  est.lower = best;
  est.upper = best;
  for (int v = 0; v < n; ++v)
    if (best_side & (1u << v)) est.min_subset.push_back(v);
  return est;
}

}  // namespace

CheegerEstimate cheeger(const Graph& g, CheegerMode mode,
                        const CheegerOptions& opts) {
  if (g.node_count() < 2)
    throw std::invalid_argument("cheeger: need at least 2 nodes");
  if (mode == CheegerMode::kExact) {
    // 30 is the bitmask ceiling; the configurable cap keeps runtime sane
    const int cap = std::min(opts.exact_max_nodes, 30);
    if (g.node_count() > cap)
      throw std::invalid_argument(
          "cheeger: too-large for exact enumeration (n > " +
          std::to_string(cap) + ")");
    return cheeger_exact(g);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian(g),
                                                        Eigen::EigenvaluesOnly);
  const double lambda2 = solver.eigenvalues()(1);
  CheegerEstimate est;
  est.method = CheegerMode::kBounds;
  est.lower = std::max(0.0, lambda2 / 2.0);
  est.upper = std::sqrt(std::max(0.0, 2.0 * g.max_degree() * lambda2));
  return est;
}

GroundedLaplacian ground(const Graph& g, const std::vector<int>& s) {
  const int n = g.node_count();
  std::vector<int> grounded = s;
  std::sort(grounded.begin(), grounded.end());
  grounded.erase(std::unique(grounded.begin(), grounded.end()), grounded.end());
  if (grounded.empty()) throw std::invalid_argument("ground: empty grounding set");
  if (static_cast<int>(grounded.size()) >= n)
    throw std::invalid_argument("ground: grounding set must leave a node");
  for (int v : grounded)
    if (v < 0 || v >= n) throw std::invalid_argument("ground: node out of range");

  std::vector<char> is_grounded(n, 0);
  for (int v : grounded) is_grounded[v] = 1;

  GroundedLaplacian out;
  out.grounded = grounded;
  for (int v = 0; v < n; ++v)
    if (!is_grounded[v]) out.kept.push_back(v);

  const int f = static_cast<int>(out.kept.size());
  const int m = static_cast<int>(grounded.size());
  const Eigen::MatrixXd l = laplacian(g);
  out.lbar.resize(f, f);
  for (int a = 0; a < f; ++a)
    for (int b = 0; b < f; ++b) out.lbar(a, b) = l(out.kept[a], out.kept[b]);
  out.coupling_matrix = Eigen::MatrixXd::Zero(f, m);
  for (int a = 0; a < f; ++a)
    for (int b = 0; b < m; ++b)
      if (g.has_edge(out.kept[a], out.grounded[b])) out.coupling_matrix(a, b) = 1.0;
  out.coupling = out.coupling_matrix.rowwise().sum();
  return out;
}

namespace {

// strips a trailing '#'-comment and returns the remaining payload
std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

bool next_payload_line(std::istream& in, std::string& out) {
  std::string line;
  while (std::getline(in, line)) {
    out = strip_comment(line);
    if (out.find_first_not_of(" \t\r\n") != std::string::npos) return true;
  }
  return false;
}

}  // namespace

Graph read_edge_list(std::istream& in) {
  std::string line;
  if (!next_payload_line(in, line))
    throw std::invalid_argument("edge list: missing header line");
  std::istringstream header(line);
  int n = 0, m = 0;
  if (!(header >> n >> m))
    throw std::invalid_argument("edge list: header must be 'N M'");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(m);
  for (int k = 0; k < m; ++k) {
    if (!next_payload_line(in, line))
      throw std::invalid_argument("edge list: fewer edges than announced");
    std::istringstream row(line);
    int i = 0, j = 0;
    if (!(row >> i >> j))
      throw std::invalid_argument("edge list: malformed edge line");
    edges.emplace_back(i - 1, j - 1);  // file is 1-indexed
  }
  return Graph(n, std::move(edges));
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out << g.node_count() << ' ' << g.edge_count() << '\n';
  for (auto [i, j] : g.edges()) out << (i + 1) << ' ' << (j + 1) << '\n';
}

std::vector<int> read_grounding_set(std::istream& in, int node_count) {
  std::string line;
  if (!next_payload_line(in, line))
    throw std::invalid_argument("grounding set: missing line");
  std::istringstream row(line);
  std::vector<int> s;
  int v = 0;
  while (row >> v) {
    if (v < 1 || v > node_count)
      throw std::invalid_argument("grounding set: node id out of range");
    s.push_back(v - 1);
  }
  if (s.empty()) throw std::invalid_argument("grounding set: no node ids");
  return s;
}

void write_grounding_set(const std::vector<int>& s, std::ostream& out) {
  for (std::size_t k = 0; k < s.size(); ++k)
    out << (k ? " " : "") << (s[k] + 1);
  out << '\n';
}

}  // namespace conslab
