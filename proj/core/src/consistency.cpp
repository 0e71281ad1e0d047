#include "sgt/consistency.hpp"

#include <algorithm>

namespace sgt {
namespace {

enum Color : unsigned char { kWhite = 0, kGray = 1, kBlack = 2 };

}  // namespace

std::optional<std::vector<int>> detect_cycle(
    int n, const std::vector<std::vector<int>>& adj) {
  std::vector<unsigned char> color(static_cast<std::size_t>(n), kWhite);
  std::vector<std::size_t> iter(static_cast<std::size_t>(n), 0);
  std::vector<int> path;

  for (int root = 0; root < n; ++root) {
    if (color[root] != kWhite) continue;
    path.push_back(root);
    color[root] = kGray;
    while (!path.empty()) {
      const int u = path.back();
      if (iter[u] < adj[u].size()) {
        const int v = adj[u][iter[u]++];
        if (color[v] == kGray) {
          // Closed walk: v ... u v, reading the gray suffix of the path.
          const auto it = std::find(path.begin(), path.end(), v);
          std::vector<int> cycle(it, path.end());
          cycle.push_back(v);
          return cycle;
        }
        if (color[v] == kWhite) {
          color[v] = kGray;
          path.push_back(v);
        }
      } else {
        color[u] = kBlack;
        path.pop_back();
      }
    }
  }
  return std::nullopt;
}

std::optional<CycleWitness> detect_cycle(const SceneGraph& g,
                                         const std::string& family) {
  const int n = static_cast<int>(g.nodes().size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& e : g.edges()) {
    if (e.rel != family) continue;
    adj[g.node_index(e.src)].push_back(g.node_index(e.dst));
  }
  const auto cycle = detect_cycle(n, adj);
  if (!cycle) return std::nullopt;
  CycleWitness w;
  w.family = family;
  w.walk.reserve(cycle->size());
  for (int idx : *cycle) w.walk.push_back(g.nodes()[idx]);
  return w;
}

ConsistencyReport check_consistency(const SceneGraph& g) {
  const SceneGraph norm = normalize_spatial(g);
  ConsistencyReport report;
  report.families_checked = norm.schema().canonical_spatial;
  for (const auto& family : report.families_checked) {
    if (auto w = detect_cycle(norm, family)) {
      report.consistent = false;
      report.cycles.push_back(std::move(*w));
    }
  }
  return report;
}

bool is_spatially_consistent(const SceneGraph& g) {
  return check_consistency(g).consistent;
}

std::vector<Edge> commonsense_violations(const SceneGraph& g) {
  std::vector<Edge> bad;
  const Schema& schema = g.schema();
  for (const auto& e : g.edges()) {
    if (schema.support_relations.count(e.rel) == 0) continue;
    const auto& ok = schema.supporter_classes;
    if (std::find(ok.begin(), ok.end(), e.dst.cls) == ok.end())
      bad.push_back(e);
  }
  return bad;
}

}  // namespace sgt
