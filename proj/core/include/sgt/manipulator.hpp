#pragma once

#include <string>
#include <vector>

#include "sgt/consistency.hpp"
#include "sgt/model.hpp"
#include "sgt/scenegraph.hpp"
#include "sgt/tokenizer.hpp"

namespace sgt {

// Which pair the stitch queries next.
enum class PairOrder {
  ContextOrder,      // node order of the working graph
  ConfidenceGreedy,  // most confident pending pair first, re-scored per commit
};

enum class EdgeAcceptance {
  All,   // keep every sampled edge
  TopK,  // keep only the top_k most confident sampled edges
};

struct StitchPolicy {
  PairOrder pair_order = PairOrder::ContextOrder;
  EdgeAcceptance edge_acceptance = EdgeAcceptance::All;
  int top_k = 4;
  // Whole-stitch redraws (seed derived per attempt) before giving up on a
  // consistent result.
  int max_resample_attempts = 8;
  // After the attempt budget: drop the lowest-confidence sampled edge lying on
  // a witness cycle, repeatedly, until consistent. Pinned and original edges
  // are never dropped.
  bool repair = false;
  SamplerConfig sampler;
};

struct PredictedEdge {
  Edge edge;
  // Probability of the drawn relation under the model's full relation
  // distribution (before temperature and truncation).
  double confidence = 0.0;
};

struct ManipulationResult {
  SceneGraph graph;
  std::vector<PredictedEdge> predicted_edges;  // commit order, after pruning
  std::vector<Edge> repaired_edges_dropped;
  int attempts_used = 0;
  bool consistent = true;  // is_spatially_consistent(graph) at return time
};

// Core of Cut-And-Stitch: for every node u != target not already covered by a
// pinned edge, query the model for the relation (target, u, ?) against the
// running context (base edges + pinned + previously committed samples) and
// commit the drawn edge. base must contain target with no incident edges
// beyond (possibly) the pinned ones; pinned edges not already present are
// added before the first query and survive every resample and repair.
ManipulationResult stitch(const ModelConfig& cfg, const ModelParams& params,
                          const Vocabulary& vocab, const SceneGraph& base,
                          const NodeRef& target,
                          const std::vector<Edge>& pinned,
                          const StitchPolicy& policy);

// Insert a new node and stitch it against every existing node.
ManipulationResult add_node(const ModelConfig& cfg, const ModelParams& params,
                            const Vocabulary& vocab, const SceneGraph& g,
                            const NodeRef& node, const StitchPolicy& policy);

// Cut every edge incident to new_edge.src, pin new_edge, and re-stitch the
// source against the rest of the scene.
ManipulationResult change_edge(const ModelConfig& cfg,
                               const ModelParams& params,
                               const Vocabulary& vocab, const SceneGraph& g,
                               const Edge& new_edge,
                               const StitchPolicy& policy);

// Pure cut: delete the node and its incident edges. No model involved.
SceneGraph remove_node_op(const SceneGraph& g, const NodeRef& node);

// Baseline: relabel the existing (src, dst, *) edge to new_edge.rel in place,
// touching nothing else. Prefers the edge in new_edge.rel's inverse family
// when the pair carries several relations.
SceneGraph naive_change_edge(const SceneGraph& g, const Edge& new_edge);

std::string manipulation_result_to_json(const ManipulationResult& r);

}  // namespace sgt
