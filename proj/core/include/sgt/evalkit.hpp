#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sgt/manipulator.hpp"
#include "sgt/model.hpp"
#include "sgt/scenegraph.hpp"
#include "sgt/tokenizer.hpp"

namespace sgt {

// All three throw EmptyInput on an empty rank list.
double mean_rank(const std::vector<int>& ranks);
double mean_reciprocal_rank(const std::vector<int>& ranks);
double hit_at_k(const std::vector<int>& ranks, int k);

// 1 + (entries strictly above dist[true_index]) + (ties at a lower index).
// Deterministic; on a uniform distribution index i ranks i+1.
int rank_of(const std::vector<double>& dist, int true_index);

struct RankOutcome {
  NodeRef src;
  NodeRef dst;
  std::string truth;
  int rank = 0;  // 1-based, <= |relations|
};

// Ranks `truth` within the model's relation distribution for (src, dst, ?)
// against `context` (the scene without the queried edge).
RankOutcome rank_query(const ModelConfig& cfg, const ModelParams& params,
                       const Vocabulary& vocab, const SceneGraph& context,
                       const NodeRef& src, const NodeRef& dst,
                       const std::string& truth);

// One report type covers both halves of the evaluation: run_edge_eval fills
// the ranking fields, run_cycle_bench the cycle fields.
struct BenchReport {
  double mr = 0.0;
  double mrr = 0.0;
  std::map<int, double> hit_at;  // K -> fraction, K in {1, 3, 10}
  int n_queries = 0;
  double cycle_rate_right = 0.0;
  double cycle_rate_front = 0.0;
  double cycle_rate_total = 0.0;  // fraction with either family cycle
};

inline constexpr int kMaxHeldOutPerScene = 20;

// Link-prediction ranking: per scene, hold out up to kMaxHeldOutPerScene
// edges (a seeded fraction-of-edges sample), query the model with the rest of
// the scene as context, and rank the true relation inside the relation block.
BenchReport run_edge_eval(const ModelConfig& cfg, const ModelParams& params,
                          const Vocabulary& vocab,
                          const std::vector<SceneGraph>& scenes,
                          double holdout_fraction, std::uint64_t seed);

// The per-query outcomes behind run_edge_eval, in the same stable order the
// aggregate consumes them (scene index, then edge index).
std::vector<RankOutcome> edge_eval_outcomes(
    const ModelConfig& cfg, const ModelParams& params, const Vocabulary& vocab,
    const std::vector<SceneGraph>& scenes, double holdout_fraction,
    std::uint64_t seed);

enum class ManipMethod { SgTailor, Naive };

struct CycleCommand {
  std::size_t scene_index = 0;
  Edge new_edge;  // flipped phrasing of an existing spatial edge
};

// One command per scene that has a spatial edge: pick one uniformly (seeded)
// and request its inverse relation on the same ordered pair.
std::vector<CycleCommand> make_cycle_commands(
    const std::vector<SceneGraph>& scenes, std::uint64_t seed);

// Applies each command with change_edge (SgTailor) or naive_change_edge,
// normalizes, and counts right-family / front-family / either cycles.
// n_queries reports the number of commands.
BenchReport run_cycle_bench(const ModelConfig& cfg, const ModelParams& params,
                            const Vocabulary& vocab,
                            const std::vector<SceneGraph>& scenes,
                            const std::vector<CycleCommand>& commands,
                            ManipMethod method, const StitchPolicy& policy);

std::string bench_report_to_json(const BenchReport& r);

}  // namespace sgt
