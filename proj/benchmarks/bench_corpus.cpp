#include <benchmark/benchmark.h>

#include <sstream>

#include "sgt/corpus.hpp"
#include "sgt/serialize.hpp"

namespace {

using namespace sgt;

void BM_generate_scene(benchmark::State& state) {
  GenConfig cfg;
  cfg.min_nodes = static_cast<int>(state.range(0));
  cfg.max_nodes = static_cast<int>(state.range(0));
  cfg.seed = 31;
  for (auto _ : state) benchmark::DoNotOptimize(generate_scene(cfg));
}
BENCHMARK(BM_generate_scene)->Arg(3)->Arg(6)->Arg(12);

void BM_triplet_round_trip(benchmark::State& state) {
  GenConfig cfg;
  cfg.min_nodes = 6;
  cfg.max_nodes = 6;
  cfg.density = 0.8;
  cfg.seed = 32;
  const SceneGraph g = generate_scene(cfg).graph;
  const std::string text = save_triplets(g);
  for (auto _ : state) {
    std::istringstream in(text);
    benchmark::DoNotOptimize(load_triplets(in, default_schema()));
  }
  state.SetBytesProcessed(state.iterations() *
                          static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_triplet_round_trip);

}  // namespace
