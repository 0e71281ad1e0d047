#include "sgt/evalkit.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "sgt/consistency.hpp"
#include "sgt/rng.hpp"

namespace sgt {

double mean_rank(const std::vector<int>& ranks) {
  if (ranks.empty()) fail(ErrorCode::EmptyInput, "no ranks");
  double sum = 0.0;
  for (int r : ranks) sum += r;
  return sum / static_cast<double>(ranks.size());
}

double mean_reciprocal_rank(const std::vector<int>& ranks) {
  if (ranks.empty()) fail(ErrorCode::EmptyInput, "no ranks");
  double sum = 0.0;
  for (int r : ranks) sum += 1.0 / static_cast<double>(r);
  return sum / static_cast<double>(ranks.size());
}

double hit_at_k(const std::vector<int>& ranks, int k) {
  if (ranks.empty()) fail(ErrorCode::EmptyInput, "no ranks");
  int hits = 0;
  for (int r : ranks) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

int rank_of(const std::vector<double>& dist, int true_index) {
  if (dist.empty()) fail(ErrorCode::EmptyInput, "empty distribution");
  if (true_index < 0 || true_index >= static_cast<int>(dist.size()))
    fail(ErrorCode::ShapeMismatch, "true_index outside distribution");
  const double p = dist[static_cast<std::size_t>(true_index)];
  int rank = 1;
  for (int j = 0; j < static_cast<int>(dist.size()); ++j) {
    if (dist[static_cast<std::size_t>(j)] > p) ++rank;
    else if (dist[static_cast<std::size_t>(j)] == p && j < true_index) ++rank;
  }
  return rank;
}

RankOutcome rank_query(const ModelConfig& cfg, const ModelParams& params,
                       const Vocabulary& vocab, const SceneGraph& context,
                       const NodeRef& src, const NodeRef& dst,
                       const std::string& truth) {
  const int true_index = context.schema().relation_index(truth);
  if (true_index < 0)
    fail(ErrorCode::UnknownSymbol, "relation '" + truth + "' not in schema");
  const TokenSequence ctx =
      encode_graph(vocab, context, cfg.context_length, /*pad=*/false);
  const TokenSequence query = build_query(vocab, src, dst);
  const auto dist =
      predict_relation_distribution(cfg, params, vocab, ctx, query);
  return RankOutcome{src, dst, truth, rank_of(dist, true_index)};
}

std::vector<RankOutcome> edge_eval_outcomes(
    const ModelConfig& cfg, const ModelParams& params, const Vocabulary& vocab,
    const std::vector<SceneGraph>& scenes, double holdout_fraction,
    std::uint64_t seed) {
  cfg.validate();
  if (scenes.empty()) fail(ErrorCode::EmptyInput, "no scenes to evaluate");
  if (holdout_fraction <= 0.0 || holdout_fraction > 1.0)
    fail(ErrorCode::ShapeMismatch, "holdout_fraction must be in (0, 1]");

  std::vector<RankOutcome> outcomes;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const SceneGraph& g = scenes[s];
    const auto& edges = g.edges();
    if (edges.empty()) continue;

    const int want = std::clamp(
        static_cast<int>(std::lround(holdout_fraction *
                                     static_cast<double>(edges.size()))),
        1, std::min<int>(kMaxHeldOutPerScene,
                         static_cast<int>(edges.size())));

    std::vector<std::size_t> idx(edges.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(want));
    std::sort(idx.begin(), idx.end());  // deterministic query order

    for (std::size_t i : idx) {
      const Edge held = edges[i];
      SceneGraph ctx_graph = g;
      ctx_graph.remove_edge(held);
      outcomes.push_back(rank_query(cfg, params, vocab, ctx_graph, held.src,
                                    held.dst, held.rel));
    }
  }

  if (outcomes.empty())
    fail(ErrorCode::EmptyInput, "no edges available for evaluation");
  return outcomes;
}

BenchReport run_edge_eval(const ModelConfig& cfg, const ModelParams& params,
                          const Vocabulary& vocab,
                          const std::vector<SceneGraph>& scenes,
                          double holdout_fraction, std::uint64_t seed) {
  const auto outcomes =
      edge_eval_outcomes(cfg, params, vocab, scenes, holdout_fraction, seed);
  std::vector<int> ranks;
  ranks.reserve(outcomes.size());
  for (const auto& o : outcomes) ranks.push_back(o.rank);

  BenchReport r;
  r.n_queries = static_cast<int>(ranks.size());
  r.mr = mean_rank(ranks);
  r.mrr = mean_reciprocal_rank(ranks);
  r.hit_at[1] = hit_at_k(ranks, 1);
  r.hit_at[3] = hit_at_k(ranks, 3);
  r.hit_at[10] = hit_at_k(ranks, 10);
  return r;
}

std::vector<CycleCommand> make_cycle_commands(
    const std::vector<SceneGraph>& scenes, std::uint64_t seed) {
  std::vector<CycleCommand> commands;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const SceneGraph& g = scenes[s];
    std::vector<const Edge*> spatial;
    for (const auto& e : g.edges())
      if (g.schema().is_spatial(e.rel)) spatial.push_back(&e);
    if (spatial.empty()) continue;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    const Edge& e = *spatial[rng.below(spatial.size())];
    const auto inv = g.schema().inverse_of(e.rel);
    if (!inv) continue;  // spatial relations always have inverses
    commands.push_back(CycleCommand{s, Edge{e.src, e.dst, *inv}});
  }
  return commands;
}

BenchReport run_cycle_bench(const ModelConfig& cfg, const ModelParams& params,
                            const Vocabulary& vocab,
                            const std::vector<SceneGraph>& scenes,
                            const std::vector<CycleCommand>& commands,
                            ManipMethod method, const StitchPolicy& policy) {
  if (commands.empty()) fail(ErrorCode::EmptyInput, "no commands");
  int right = 0, front = 0, total = 0;
  for (const auto& cmd : commands) {
    if (cmd.scene_index >= scenes.size())
      fail(ErrorCode::ShapeMismatch, "command references missing scene");
    const SceneGraph& g = scenes[cmd.scene_index];
    SceneGraph result;
    if (method == ManipMethod::Naive) {
      result = naive_change_edge(g, cmd.new_edge);
    } else {
      StitchPolicy per_cmd = policy;
      // Decorrelate command draws while keeping the run reproducible.
      per_cmd.sampler.seed =
          derive_seed(policy.sampler.seed,
                      0x5EED0000ull + static_cast<std::uint64_t>(
                                          cmd.scene_index));
      result = change_edge(cfg, params, vocab, g, cmd.new_edge, per_cmd).graph;
    }
    const SceneGraph normalized = normalize_spatial(result);
    const bool has_right = detect_cycle(normalized, "right").has_value();
    const bool has_front = detect_cycle(normalized, "front").has_value();
    right += has_right ? 1 : 0;
    front += has_front ? 1 : 0;
    total += (has_right || has_front) ? 1 : 0;
  }
  BenchReport r;
  r.n_queries = static_cast<int>(commands.size());
  const double n = static_cast<double>(commands.size());
  r.cycle_rate_right = right / n;
  r.cycle_rate_front = front / n;
  r.cycle_rate_total = total / n;
  return r;
}

std::string bench_report_to_json(const BenchReport& r) {
  nlohmann::json j;
  j["mr"] = r.mr;
  j["mrr"] = r.mrr;
  j["hit_at"] = nlohmann::json::object();
  for (const auto& [k, v] : r.hit_at) j["hit_at"][std::to_string(k)] = v;
  j["n_queries"] = r.n_queries;
  j["cycle_rate_right"] = r.cycle_rate_right;
  j["cycle_rate_front"] = r.cycle_rate_front;
  j["cycle_rate_total"] = r.cycle_rate_total;
  return j.dump(2) + "\n";
}

}  // namespace sgt
