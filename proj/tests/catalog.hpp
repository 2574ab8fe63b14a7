#pragma once

// Named small graphs used across the test suites.

#include <string>
#include <utility>
#include <vector>

#include "conslab/graph.hpp"

namespace catalog {

inline conslab::Graph petersen() {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < 5; ++i) {
    e.emplace_back(i, (i + 1) % 5);          // outer cycle
    e.emplace_back(i, i + 5);                // spokes
    e.emplace_back(i + 5, (i + 2) % 5 + 5);  // inner pentagram
  }
  return conslab::Graph(10, std::move(e));
}

inline conslab::Graph hypercube3() {
  std::vector<std::pair<int, int>> e;
  for (int v = 0; v < 8; ++v)
    for (int bit = 0; bit < 3; ++bit) {
      const int w = v ^ (1 << bit);
      if (v < w) e.emplace_back(v, w);
    }
  return conslab::Graph(8, std::move(e));
}

inline conslab::Graph complete_bipartite(int a, int b) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j) e.emplace_back(i, a + j);
  return conslab::Graph(a + b, std::move(e));
}

struct Named {
  std::string name;
  conslab::Graph graph;
};

// connected graphs with at most 10 nodes
inline std::vector<Named> small_graphs() {
  using conslab::Graph;
  std::vector<Named> out;
  for (int n = 2; n <= 10; ++n)
    out.push_back({"path" + std::to_string(n), Graph::path(n)});
  for (int n = 3; n <= 10; ++n)
    out.push_back({"cycle" + std::to_string(n), Graph::cycle(n)});
  for (int n = 2; n <= 10; ++n)
    out.push_back({"complete" + std::to_string(n), Graph::complete(n)});
  for (int n = 4; n <= 10; ++n)
    out.push_back({"star" + std::to_string(n), Graph::star(n)});
  out.push_back({"paw", Graph::paw()});
  out.push_back({"petersen", petersen()});
  out.push_back({"hypercube3", hypercube3()});
  out.push_back({"k33", complete_bipartite(3, 3)});
  out.push_back({"k23", complete_bipartite(2, 3)});
  return out;
}

}  // namespace catalog
