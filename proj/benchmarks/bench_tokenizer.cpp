#include <benchmark/benchmark.h>

#include "sgt/corpus.hpp"
#include "sgt/tokenizer.hpp"

namespace {

using namespace sgt;

const Vocabulary& vocab() {
  static const Vocabulary v = Vocabulary::build(default_schema(), 16);
  return v;
}

// A dense 6-object scene: 8 tokens per edge, the unit both loops process.
const SceneGraph& sample_scene() {
  static const SceneGraph g = [] {
    GenConfig cfg;
    cfg.min_nodes = 6;
    cfg.max_nodes = 6;
    cfg.density = 0.8;
    cfg.seed = 11;
    return generate_scene(cfg).graph;
  }();
  return g;
}

void BM_encode_graph(benchmark::State& state) {
  const SceneGraph& g = sample_scene();
  const auto tokens =
      static_cast<std::int64_t>(8 * g.edges().size() + 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(encode_graph(vocab(), g, 1024, false));
  state.SetItemsProcessed(state.iterations() * tokens);
}
BENCHMARK(BM_encode_graph);

void BM_decode_sequence(benchmark::State& state) {
  const TokenSequence seq = encode_graph(vocab(), sample_scene(), 1024, false);
  const auto tokens = static_cast<std::int64_t>(seq.ids.size());
  for (auto _ : state)
    benchmark::DoNotOptimize(decode_sequence(vocab(), seq));
  state.SetItemsProcessed(state.iterations() * tokens);
}
BENCHMARK(BM_decode_sequence);

void BM_encode_padded(benchmark::State& state) {
  const SceneGraph& g = sample_scene();
  for (auto _ : state)
    benchmark::DoNotOptimize(encode_graph(vocab(), g, 256, true));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_encode_padded);

}  // namespace
