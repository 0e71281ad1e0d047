#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "sgt/consistency.hpp"
#include "sgt/corpus.hpp"
#include "sgt/rng.hpp"

namespace {

using namespace sgt;

// Sparse digraph near the cycle-formation threshold (mean out-degree 2), the
// worst regime for short-circuiting: the DFS usually has to visit everything.
std::vector<std::vector<int>> random_adj(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  const double p = 2.0 / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < p)
        adj[static_cast<std::size_t>(i)].push_back(j);
  return adj;
}

void BM_detect_cycle_adj(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto adj = random_adj(n, derive_seed(7, static_cast<std::uint64_t>(n)));
  for (auto _ : state) benchmark::DoNotOptimize(detect_cycle(n, adj));
  std::int64_t edges = 0;
  for (const auto& row : adj) edges += static_cast<std::int64_t>(row.size());
  state.SetItemsProcessed(state.iterations() * edges);
}
BENCHMARK(BM_detect_cycle_adj)->Arg(8)->Arg(64)->Arg(512);

void BM_check_consistency(benchmark::State& state) {
  GenConfig cfg;
  cfg.min_nodes = 6;
  cfg.max_nodes = 6;
  cfg.density = 0.8;
  cfg.seed = 21;
  const SceneGraph g = generate_scene(cfg).graph;
  for (auto _ : state) benchmark::DoNotOptimize(check_consistency(g));
}
BENCHMARK(BM_check_consistency);

void BM_normalize_spatial(benchmark::State& state) {
  GenConfig cfg;
  cfg.min_nodes = 6;
  cfg.max_nodes = 6;
  cfg.density = 0.8;
  cfg.seed = 22;
  const SceneGraph g = generate_scene(cfg).graph;
  for (auto _ : state) benchmark::DoNotOptimize(normalize_spatial(g));
}
BENCHMARK(BM_normalize_spatial);

}  // namespace
