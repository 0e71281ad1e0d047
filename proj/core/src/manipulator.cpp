#include "sgt/manipulator.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "json_util.hpp"
#include "sgt/serialize.hpp"

namespace sgt {
namespace {

void validate_policy(const StitchPolicy& policy) {
  if (policy.max_resample_attempts < 1)
    fail(ErrorCode::ShapeMismatch, "max_resample_attempts must be >= 1");
  if (policy.edge_acceptance == EdgeAcceptance::TopK && policy.top_k < 1)
    fail(ErrorCode::ShapeMismatch, "top_k must be >= 1");
}

std::vector<double> relation_distribution(const ModelConfig& cfg,
                                          const ModelParams& params,
                                          const Vocabulary& vocab,
                                          const SceneGraph& work,
                                          const NodeRef& subj,
                                          const NodeRef& obj) {
  const TokenSequence context =
      encode_graph(vocab, work, cfg.context_length, /*pad=*/false);
  const TokenSequence query = build_query(vocab, subj, obj);
  return predict_relation_distribution(cfg, params, vocab, context, query);
}

// One full stitch pass with a fixed RNG. Returns the working graph and the
// committed samples; consistency is the caller's concern.
void stitch_once(const ModelConfig& cfg, const ModelParams& params,
                 const Vocabulary& vocab, const SceneGraph& base,
                 const NodeRef& target, const std::vector<Edge>& pinned,
                 const StitchPolicy& policy, Rng& rng, SceneGraph& work,
                 std::vector<PredictedEdge>& predicted) {
  work = base;
  for (const auto& e : pinned)
    if (!work.has_edge(e)) work.add_edge(e);
  predicted.clear();

  std::vector<NodeRef> pending;
  for (const auto& u : work.nodes()) {
    if (u == target) continue;
    bool covered = false;
    for (const auto& e : pinned)
      covered = covered || (e.src == target && e.dst == u) ||
                (e.src == u && e.dst == target);
    if (!covered) pending.push_back(u);
  }

  while (!pending.empty()) {
    std::size_t pick = 0;
    std::vector<double> dist;
    if (policy.pair_order == PairOrder::ConfidenceGreedy &&
        pending.size() > 1) {
      double best_top = -1.0;
      for (std::size_t i = 0; i < pending.size(); ++i) {
        auto d = relation_distribution(cfg, params, vocab, work, target,
                                       pending[i]);
        const double top = *std::max_element(d.begin(), d.end());
        if (top > best_top) {
          best_top = top;
          pick = i;
          dist = std::move(d);
        }
      }
    } else {
      dist = relation_distribution(cfg, params, vocab, work, target,
                                   pending.front());
    }

    const Draw draw =
        sample_top_p(dist, policy.sampler.top_p, policy.sampler.temperature,
                     rng);
    const std::string rel = vocab.token(vocab.relation_begin() + draw.index);
    const Edge e{target, pending[pick], rel};
    work.add_edge(e);
    predicted.push_back(PredictedEdge{e, draw.confidence});
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  if (policy.edge_acceptance == EdgeAcceptance::TopK &&
      static_cast<int>(predicted.size()) > policy.top_k) {
    std::vector<std::size_t> order(predicted.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&predicted](std::size_t a, std::size_t b) {
                       return predicted[a].confidence > predicted[b].confidence;
                     });
    std::vector<bool> keep(predicted.size(), false);
    for (int i = 0; i < policy.top_k; ++i)
      keep[order[static_cast<std::size_t>(i)]] = true;
    std::vector<PredictedEdge> kept;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      if (keep[i])
        kept.push_back(predicted[i]);
      else
        work.remove_edge(predicted[i].edge);
    }
    predicted = std::move(kept);
  }
}

// The witness walk is phrased canonically; the stored edge may be flipped.
bool edge_on_cycle(const Schema& schema, const Edge& e, const CycleWitness& w) {
  const auto inv = schema.inverse_of(w.family);
  for (std::size_t i = 0; i + 1 < w.walk.size(); ++i) {
    const NodeRef& u = w.walk[i];
    const NodeRef& v = w.walk[i + 1];
    if (e.src == u && e.dst == v && e.rel == w.family) return true;
    if (inv && e.src == v && e.dst == u && e.rel == *inv) return true;
  }
  return false;
}

}  // namespace

ManipulationResult stitch(const ModelConfig& cfg, const ModelParams& params,
                          const Vocabulary& vocab, const SceneGraph& base,
                          const NodeRef& target,
                          const std::vector<Edge>& pinned,
                          const StitchPolicy& policy) {
  cfg.validate();
  validate_policy(policy);
  if (!base.has_node(target))
    fail(ErrorCode::UnknownNode, target.display() + " not in graph");

  ManipulationResult result;
  for (int attempt = 0; attempt < policy.max_resample_attempts; ++attempt) {
    Rng rng(derive_seed(policy.sampler.seed,
                        static_cast<std::uint64_t>(attempt)));
    stitch_once(cfg, params, vocab, base, target, pinned, policy, rng,
                result.graph, result.predicted_edges);
    result.attempts_used = attempt + 1;
    result.consistent = is_spatially_consistent(result.graph);
    if (result.consistent) return result;
  }
  if (!policy.repair) return result;

  // Repair: drop the cheapest sampled edge on a witness cycle until clean.
  auto report = check_consistency(result.graph);
  while (!report.consistent) {
    const CycleWitness& w = report.cycles.front();
    int victim = -1;
    double victim_conf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.predicted_edges.size(); ++i) {
      const auto& pe = result.predicted_edges[i];
      if (edge_on_cycle(result.graph.schema(), pe.edge, w) &&
          pe.confidence < victim_conf) {
        victim = static_cast<int>(i);
        victim_conf = pe.confidence;
      }
    }
    if (victim < 0) break;  // cycle made of unremovable edges; give up
    const Edge dropped =
        result.predicted_edges[static_cast<std::size_t>(victim)].edge;
    result.graph.remove_edge(dropped);
    result.repaired_edges_dropped.push_back(dropped);
    result.predicted_edges.erase(result.predicted_edges.begin() + victim);
    report = check_consistency(result.graph);
  }
  result.consistent = report.consistent;
  return result;
}

ManipulationResult add_node(const ModelConfig& cfg, const ModelParams& params,
                            const Vocabulary& vocab, const SceneGraph& g,
                            const NodeRef& node, const StitchPolicy& policy) {
  if (g.has_node(node))
    fail(ErrorCode::DuplicateNode, node.display() + " already in graph");
  SceneGraph base = g;
  base.add_node(node);
  return stitch(cfg, params, vocab, base, node, {}, policy);
}

ManipulationResult change_edge(const ModelConfig& cfg,
                               const ModelParams& params,
                               const Vocabulary& vocab, const SceneGraph& g,
                               const Edge& new_edge,
                               const StitchPolicy& policy) {
  if (!g.has_node(new_edge.src))
    fail(ErrorCode::UnknownNode, new_edge.src.display() + " not in graph");
  if (!g.has_node(new_edge.dst))
    fail(ErrorCode::UnknownNode, new_edge.dst.display() + " not in graph");
  if (!g.schema().has_relation(new_edge.rel))
    fail(ErrorCode::UnknownSymbol, "unknown relation '" + new_edge.rel + "'");
  SceneGraph base = g;
  base.cut_incident(new_edge.src);
  return stitch(cfg, params, vocab, base, new_edge.src, {new_edge}, policy);
}

SceneGraph remove_node_op(const SceneGraph& g, const NodeRef& node) {
  if (!g.has_node(node))
    fail(ErrorCode::UnknownNode, node.display() + " not in graph");
  SceneGraph out = g;
  out.remove_node(node);
  return out;
}

SceneGraph naive_change_edge(const SceneGraph& g, const Edge& new_edge) {
  if (!g.has_node(new_edge.src))
    fail(ErrorCode::UnknownNode, new_edge.src.display() + " not in graph");
  if (!g.has_node(new_edge.dst))
    fail(ErrorCode::UnknownNode, new_edge.dst.display() + " not in graph");
  if (!g.schema().has_relation(new_edge.rel))
    fail(ErrorCode::UnknownSymbol, "unknown relation '" + new_edge.rel + "'");

  const auto inv = g.schema().inverse_of(new_edge.rel);
  const Edge* same_family = nullptr;
  const Edge* any_pair = nullptr;
  for (const auto& e : g.edges()) {
    if (!(e.src == new_edge.src && e.dst == new_edge.dst)) continue;
    if (!any_pair) any_pair = &e;
    if (!same_family &&
        (e.rel == new_edge.rel || (inv && e.rel == *inv)))
      same_family = &e;
  }
  const Edge* old_edge = same_family ? same_family : any_pair;
  if (!old_edge)
    fail(ErrorCode::NoSuchEdge, "no edge " + new_edge.src.display() + " -> " +
                                    new_edge.dst.display());

  SceneGraph out = g;
  const Edge to_remove = *old_edge;  // copy before mutating the edge list
  out.remove_edge(to_remove);
  out.add_edge(new_edge);
  return out;
}

std::string manipulation_result_to_json(const ManipulationResult& r) {
  nlohmann::json j;
  j["consistent"] = r.consistent;
  j["attempts_used"] = r.attempts_used;
  j["predicted_edges"] = nlohmann::json::array();
  for (const auto& pe : r.predicted_edges)
    j["predicted_edges"].push_back({{"src", pe.edge.src.display()},
                                    {"dst", pe.edge.dst.display()},
                                    {"rel", pe.edge.rel},
                                    {"confidence", pe.confidence}});
  j["repaired_edges_dropped"] = nlohmann::json::array();
  for (const auto& e : r.repaired_edges_dropped)
    j["repaired_edges_dropped"].push_back({{"src", e.src.display()},
                                           {"dst", e.dst.display()},
                                           {"rel", e.rel}});
  j["graph"] = nlohmann::json::parse(graph_to_json(r.graph));
  return j.dump(2) + "\n";
}

}  // namespace sgt
