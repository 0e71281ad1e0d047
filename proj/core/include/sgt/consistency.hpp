#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sgt/scenegraph.hpp"

namespace sgt {

struct CycleWitness {
  std::string family;          // relation the cycle lives in (canonical form)
  std::vector<NodeRef> walk;   // walk.front() == walk.back()
};

struct ConsistencyReport {
  bool consistent = true;
  std::vector<std::string> families_checked;
  std::vector<CycleWitness> cycles;  // first witness per offending family
};

// DFS (visited + recursion stack) over an integer adjacency list; returns the
// first cycle found as a closed walk of node indices, or nullopt. The hot path
// shared by the graph-level API, the benchmarks, and the oracle comparison.
std::optional<std::vector<int>> detect_cycle(
    int n, const std::vector<std::vector<int>>& adj);

// Cycle in the subgraph of edges labeled exactly `family` (no normalization
// applied; normalize first if you want phrasing-insensitive answers).
std::optional<CycleWitness> detect_cycle(const SceneGraph& g,
                                         const std::string& family);

// Normalizes spatial phrasing, then checks every canonical spatial family.
ConsistencyReport check_consistency(const SceneGraph& g);

// true iff normalize_spatial(g) has no right-family and no front-family cycle.
bool is_spatially_consistent(const SceneGraph& g);

// P1 hook: support edges whose target class is not a schema supporter class.
std::vector<Edge> commonsense_violations(const SceneGraph& g);

}  // namespace sgt
