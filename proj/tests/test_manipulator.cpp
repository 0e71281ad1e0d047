#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "sgt/consistency.hpp"
#include "sgt/corpus.hpp"
#include "sgt/manipulator.hpp"
#include "sgt/model.hpp"
#include "sgt/tokenizer.hpp"

using namespace sgt;

namespace {

constexpr double kUniform = 1.0 / 7.0;

NodeRef node(const std::string& cls, int idx = 0) { return NodeRef{cls, idx}; }

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.vocab_size = 39;
  cfg.context_length = 384;
  cfg.hidden_size = 16;
  cfg.num_heads = 2;
  cfg.num_layers = 1;
  cfg.seed = 5;
  return cfg;
}

// Untrained params have a zero output head, so every relation distribution is
// exactly uniform: confidences are 1/7 and the stitch is a pure function of
// the policy seed.
struct Fixture {
  ModelConfig cfg = tiny_cfg();
  Vocabulary vocab = Vocabulary::build(default_schema(), 16);
  ModelParams params = init_params<float>(cfg);
};

template <typename Fn>
void expect_code(Fn&& fn, ErrorCode code) {
  try {
    fn();
    FAIL_CHECK("expected an Error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

bool contains_edge(const std::vector<PredictedEdge>& v, const Edge& e) {
  for (const auto& pe : v)
    if (pe.edge == e) return true;
  return false;
}

std::size_t count_occurrences(const std::string& hay, const std::string& pin) {
  std::size_t n = 0;
  for (std::size_t at = hay.find(pin); at != std::string::npos;
       at = hay.find(pin, at + pin.size()))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("degenerate policies are rejected before any sampling") {
  Fixture f;
  SceneGraph g;
  g.add_node(node("chair"));

  StitchPolicy no_attempts;
  no_attempts.max_resample_attempts = 0;
  expect_code(
      [&] { add_node(f.cfg, f.params, f.vocab, g, node("lamp"), no_attempts); },
      ErrorCode::ShapeMismatch);

  StitchPolicy empty_topk;
  empty_topk.edge_acceptance = EdgeAcceptance::TopK;
  empty_topk.top_k = 0;
  expect_code(
      [&] { add_node(f.cfg, f.params, f.vocab, g, node("lamp"), empty_topk); },
      ErrorCode::ShapeMismatch);
}

TEST_CASE("argument errors carry the specific codes") {
  Fixture f;
  SceneGraph g;
  g.add_node(node("chair"));
  g.add_node(node("desk"));
  g.add_edge({node("chair"), node("desk"), "right"});
  const StitchPolicy policy;

  expect_code(
      [&] { add_node(f.cfg, f.params, f.vocab, g, node("chair"), policy); },
      ErrorCode::DuplicateNode);
  expect_code(
      [&] {
        stitch(f.cfg, f.params, f.vocab, g, node("plant"), {}, policy);
      },
      ErrorCode::UnknownNode);
  expect_code(
      [&] {
        change_edge(f.cfg, f.params, f.vocab, g,
                    {node("plant"), node("desk"), "left"}, policy);
      },
      ErrorCode::UnknownNode);
  expect_code(
      [&] {
        change_edge(f.cfg, f.params, f.vocab, g,
                    {node("chair"), node("plant"), "left"}, policy);
      },
      ErrorCode::UnknownNode);
  try {
    change_edge(f.cfg, f.params, f.vocab, g,
                {node("chair"), node("desk"), "floats_above"}, policy);
    FAIL_CHECK("expected an Error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownSymbol);
    CHECK(std::string(e.what()).find("floats_above") != std::string::npos);
  }

  expect_code([&] { remove_node_op(g, node("plant")); },
              ErrorCode::UnknownNode);
  expect_code(
      [&] { naive_change_edge(g, {node("plant"), node("desk"), "left"}); },
      ErrorCode::UnknownNode);
  expect_code(
      [&] { naive_change_edge(g, {node("chair"), node("desk"), "hovers"}); },
      ErrorCode::UnknownSymbol);
  try {
    naive_change_edge(g, {node("desk"), node("chair"), "left"});
    FAIL_CHECK("expected an Error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoSuchEdge);
    CHECK(std::string(e.what()).find("no edge") != std::string::npos);
  }
}

TEST_CASE("add_node stitches one edge per existing node, context order") {
  Fixture f;
  SceneGraph g;
  g.add_node(node("chair"));
  g.add_node(node("desk"));
  g.add_node(node("lamp"));
  g.add_edge({node("chair"), node("desk"), "right"});
  g.add_edge({node("lamp"), node("desk"), "standing_on"});

  StitchPolicy policy;
  policy.sampler.top_p = 1.0;
  policy.sampler.seed = 11;
  const ManipulationResult res =
      add_node(f.cfg, f.params, f.vocab, g, node("monitor"), policy);

  CHECK(res.graph.has_node(node("monitor")));
  CHECK(res.graph.nodes().size() == 4);
  REQUIRE(res.predicted_edges.size() == 3);
  CHECK(res.graph.edges().size() == 5);

  // ContextOrder walks pending partners in node-insertion order.
  CHECK(res.predicted_edges[0].edge.dst == node("chair"));
  CHECK(res.predicted_edges[1].edge.dst == node("desk"));
  CHECK(res.predicted_edges[2].edge.dst == node("lamp"));

  for (const auto& pe : res.predicted_edges) {
    CHECK(pe.edge.src == node("monitor"));
    CHECK(default_schema().has_relation(pe.edge.rel));
    CHECK(res.graph.has_edge(pe.edge));
    // Untrained model: confidence is the uniform relation probability.
    CHECK(pe.confidence == doctest::Approx(kUniform).epsilon(1e-9));
  }

  CHECK(res.attempts_used >= 1);
  CHECK(res.attempts_used <= policy.max_resample_attempts);
  CHECK(res.consistent == check_consistency(res.graph).consistent);
  CHECK(res.repaired_edges_dropped.empty());

  // The input graph is untouched.
  CHECK_FALSE(g.has_node(node("monitor")));
  CHECK(g.edges().size() == 2);
}

TEST_CASE("stitch with nothing pending succeeds on the first attempt") {
  Fixture f;
  SceneGraph g;
  const StitchPolicy policy;
  const ManipulationResult res =
      add_node(f.cfg, f.params, f.vocab, g, node("bed"), policy);
  CHECK(res.graph.nodes().size() == 1);
  CHECK(res.graph.edges().empty());
  CHECK(res.predicted_edges.empty());
  CHECK(res.attempts_used == 1);
  CHECK(res.consistent);

  // A lone sampled edge can never close a cycle either.
  SceneGraph pair;
  pair.add_node(node("chair"));
  const ManipulationResult one =
      add_node(f.cfg, f.params, f.vocab, pair, node("desk"), policy);
  CHECK(one.attempts_used == 1);
  CHECK(one.consistent);
  CHECK(one.predicted_edges.size() == 1);
}

TEST_CASE("pinned edges cover their pair and are never resampled") {
  Fixture f;
  SceneGraph g;
  g.add_node(node("chair"));
  g.add_node(node("desk"));
  g.add_node(node("table"));

  // Pin points *into* the target; coverage must treat direction symmetrically.
  const Edge pin{node("desk"), node("chair"), "right"};
  StitchPolicy policy;
  policy.sampler.seed = 21;
  const ManipulationResult res =
      stitch(f.cfg, f.params, f.vocab, g, node("chair"), {pin}, policy);

  CHECK(res.graph.has_edge(pin));
  REQUIRE(res.predicted_edges.size() == 1);
  CHECK(res.predicted_edges[0].edge.src == node("chair"));
  CHECK(res.predicted_edges[0].edge.dst == node("table"));
  CHECK(res.graph.edges().size() == 2);
  CHECK_FALSE(contains_edge(res.predicted_edges, pin));
}

TEST_CASE("change_edge cuts every incident edge and pins the replacement") {
  Fixture f;
  SceneGraph g;
  for (const char* cls : {"chair", "desk", "table", "shelf"})
    g.add_node(node(cls));
  g.add_edge({node("chair"), node("desk"), "right"});   // incident: cut
  g.add_edge({node("table"), node("chair"), "front"});  // incident: cut
  g.add_edge({node("desk"), node("table"), "right"});   // keep
  g.add_edge({node("shelf"), node("desk"), "behind"});  // keep
  REQUIRE(check_consistency(g).consistent);

  const Edge new_edge{node("chair"), node("desk"), "left"};
  StitchPolicy policy;
  policy.sampler.seed = 31;
  const ManipulationResult res =
      change_edge(f.cfg, f.params, f.vocab, g, new_edge, policy);

  CHECK(res.graph.has_edge(new_edge));
  CHECK_FALSE(res.graph.has_edge({node("chair"), node("desk"), "right"}));
  CHECK_FALSE(res.graph.has_edge({node("table"), node("chair"), "front"}));
  CHECK(res.graph.has_edge({node("desk"), node("table"), "right"}));
  CHECK(res.graph.has_edge({node("shelf"), node("desk"), "behind"}));

  // Pending = everyone except the pinned partner, in node order.
  REQUIRE(res.predicted_edges.size() == 2);
  CHECK(res.predicted_edges[0].edge.dst == node("table"));
  CHECK(res.predicted_edges[1].edge.dst == node("shelf"));
  CHECK(res.graph.edges().size() == 5);

  // Cut completeness: edges at the subject are the pin or freshly sampled.
  for (const auto& e : res.graph.edges()) {
    if (!(e.src == node("chair") || e.dst == node("chair"))) continue;
    CHECK((e == new_edge || contains_edge(res.predicted_edges, e)));
  }
}

TEST_CASE("results are a pure function of the policy seed") {
  Fixture f;
  SceneGraph g;
  g.add_node(node("chair"));
  g.add_node(node("desk"));
  g.add_node(node("lamp"));
  g.add_edge({node("chair"), node("desk"), "right"});

  StitchPolicy policy;
  policy.sampler.seed = 1;
  const ManipulationResult a =
      add_node(f.cfg, f.params, f.vocab, g, node("plant"), policy);
  const ManipulationResult b =
      add_node(f.cfg, f.params, f.vocab, g, node("plant"), policy);
  CHECK(manipulation_result_to_json(a) == manipulation_result_to_json(b));

  policy.sampler.seed = 2;
  const ManipulationResult c =
      add_node(f.cfg, f.params, f.vocab, g, node("plant"), policy);
  CHECK(manipulation_result_to_json(a) != manipulation_result_to_json(c));
}

TEST_CASE("TopK keeps the k most confident edges, ties in commit order") {
  Fixture f;
  SceneGraph g;
  for (const char* cls : {"chair", "desk", "lamp", "table", "shelf", "bed"})
    g.add_node(node(cls));

  StitchPolicy policy;
  policy.edge_acceptance = EdgeAcceptance::TopK;
  policy.top_k = 2;
  policy.sampler.seed = 13;
  const ManipulationResult res =
      add_node(f.cfg, f.params, f.vocab, g, node("monitor"), policy);

  // Uniform confidences: the stable sort keeps the first two commits.
  REQUIRE(res.predicted_edges.size() == 2);
  CHECK(res.predicted_edges[0].edge.dst == node("chair"));
  CHECK(res.predicted_edges[1].edge.dst == node("desk"));
  CHECK(res.graph.edges().size() == 2);
  for (const auto& e : res.graph.edges())
    CHECK((e.dst == node("chair") || e.dst == node("desk")));
  CHECK(res.consistent == check_consistency(res.graph).consistent);

  // No pruning when the budget is not exceeded.
  SceneGraph small;
  small.add_node(node("chair"));
  small.add_node(node("desk"));
  StitchPolicy roomy = policy;
  roomy.top_k = 4;
  const ManipulationResult kept =
      add_node(f.cfg, f.params, f.vocab, small, node("monitor"), roomy);
  CHECK(kept.predicted_edges.size() == 2);
  CHECK(kept.graph.edges().size() == 2);
}

TEST_CASE("a poisoned base exhausts the attempt budget honestly") {
  Fixture f;
  SceneGraph g;
  g.add_node(node("box", 0));
  g.add_node(node("box", 1));
  g.add_edge({node("box", 0), node("box", 1), "right"});
  g.add_edge({node("box", 1), node("box", 0), "right"});
  g.add_node(node("chair"));
  REQUIRE_FALSE(check_consistency(g).consistent);

  StitchPolicy policy;
  policy.max_resample_attempts = 3;
  policy.sampler.seed = 7;
  const ManipulationResult res =
      stitch(f.cfg, f.params, f.vocab, g, node("chair"), {}, policy);
  CHECK(res.attempts_used == 3);
  CHECK_FALSE(res.consistent);
  CHECK(res.repaired_edges_dropped.empty());
  CHECK(res.graph.has_edge({node("box", 0), node("box", 1), "right"}));
  CHECK(res.graph.has_edge({node("box", 1), node("box", 0), "right"}));

  // Repair can only drop sampled edges, so the seed cycle survives and the
  // result stays honestly inconsistent.
  StitchPolicy with_repair = policy;
  with_repair.repair = true;
  const ManipulationResult rep =
      stitch(f.cfg, f.params, f.vocab, g, node("chair"), {}, with_repair);
  CHECK(rep.attempts_used == 3);
  CHECK_FALSE(rep.consistent);
  CHECK(rep.graph.has_edge({node("box", 0), node("box", 1), "right"}));
  CHECK(rep.graph.has_edge({node("box", 1), node("box", 0), "right"}));
  for (const auto& e : rep.repaired_edges_dropped)
    CHECK((e.src == node("chair") || e.dst == node("chair")));
}

TEST_CASE("repair drops the first minimum-confidence edge on the witness") {
  Fixture f;
  SceneGraph g;
  g.add_node(node("chair"));
  g.add_node(node("desk"));
  g.add_node(node("table"));
  g.add_edge({node("desk"), node("chair"), "right"});

  // top_p = 0.2 over a uniform distribution keeps exactly {left, right}, so
  // the only inconsistent outcome is (table left chair) + (table right desk),
  // closing chair -> table -> desk -> chair in the right family.
  StitchPolicy policy;
  policy.sampler.top_p = 0.2;
  policy.max_resample_attempts = 1;

  int inconsistent_seen = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    policy.sampler.seed = seed;
    policy.repair = false;
    const ManipulationResult raw =
        stitch(f.cfg, f.params, f.vocab, g, node("table"), {}, policy);
    REQUIRE(raw.predicted_edges.size() == 2);
    for (const auto& pe : raw.predicted_edges)
      CHECK((pe.edge.rel == "left" || pe.edge.rel == "right"));
    if (raw.consistent) continue;
    ++inconsistent_seen;

    CHECK(raw.predicted_edges[0].edge.rel == "left");
    CHECK(raw.predicted_edges[1].edge.rel == "right");

    policy.repair = true;
    const ManipulationResult rep =
        stitch(f.cfg, f.params, f.vocab, g, node("table"), {}, policy);
    CHECK(rep.attempts_used == 1);
    CHECK(rep.consistent);
    CHECK(check_consistency(rep.graph).consistent);
    CHECK(rep.graph.has_edge({node("desk"), node("chair"), "right"}));

    // Equal confidences: the victim is the earliest on-cycle commit.
    REQUIRE(rep.repaired_edges_dropped.size() == 1);
    CHECK(rep.repaired_edges_dropped[0] ==
          Edge{node("table"), node("chair"), "left"});
    REQUIRE(rep.predicted_edges.size() == 1);
    CHECK(rep.predicted_edges[0].edge ==
          Edge{node("table"), node("desk"), "right"});
    CHECK_FALSE(rep.graph.has_edge({node("table"), node("chair"), "left"}));
    CHECK(rep.graph.has_edge({node("table"), node("desk"), "right"}));
  }
  // 1/4 of two-coin-flip outcomes close the cycle; 60 seeds must hit some.
  CHECK(inconsistent_seen >= 5);
}

TEST_CASE("change_edge with repair always lands consistent on clean scenes") {
  Fixture f;
  const auto& rels = default_schema().relations;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GenConfig gc;
    gc.seed = 1000 + seed;
    gc.min_nodes = 3;
    gc.max_nodes = 5;
    gc.max_edges = 12;
    const Scene scene = generate_scene(gc);
    REQUIRE(check_consistency(scene.graph).consistent);
    const auto& nodes = scene.graph.nodes();
    const std::size_t n = nodes.size();
    const Edge new_edge{nodes[seed % n], nodes[(seed + 1) % n],
                        rels[seed % rels.size()]};

    StitchPolicy policy;
    policy.repair = true;
    policy.max_resample_attempts = 2;
    policy.sampler.top_p = 1.0;
    policy.sampler.seed = seed;
    const ManipulationResult res =
        change_edge(f.cfg, f.params, f.vocab, scene.graph, new_edge, policy);

    CHECK(res.consistent);
    CHECK(check_consistency(res.graph).consistent);
    CHECK(res.graph.has_edge(new_edge));  // the pin survives repair

    for (const auto& e : res.graph.edges()) {
      const bool incident =
          e.src == new_edge.src || e.dst == new_edge.src;
      if (incident)
        CHECK((e == new_edge || contains_edge(res.predicted_edges, e)));
      else
        CHECK(scene.graph.has_edge(e));
    }
    for (const auto& e : scene.graph.edges())
      if (!(e.src == new_edge.src || e.dst == new_edge.src))
        CHECK(res.graph.has_edge(e));
    for (const auto& dropped : res.repaired_edges_dropped) {
      CHECK_FALSE(res.graph.has_edge(dropped));
      CHECK_FALSE(contains_edge(res.predicted_edges, dropped));
    }
  }
}

TEST_CASE("ConfidenceGreedy stitches the most confident pair first") {
  Fixture f;
  // A non-uniform head makes per-pair confidences distinguishable.
  Rng hrng(123);
  for (long r = 0; r < f.params.head_w.rows(); ++r)
    for (long c = 0; c < f.params.head_w.cols(); ++c)
      f.params.head_w(r, c) = static_cast<float>(hrng.normal() * 0.02);

  SceneGraph g;
  for (const char* cls : {"chair", "desk", "lamp", "table"})
    g.add_node(node(cls));

  // Oracle: the first greedy pick maximises the top relation probability
  // against the initial context, independent of the sampling RNG.
  SceneGraph work = g;
  work.add_node(node("monitor"));
  const TokenSequence ctx =
      encode_graph(f.vocab, work, f.cfg.context_length, false);
  double best_top = -1.0;
  NodeRef expected_first;
  std::vector<double> expected_dist;
  for (const auto& u : g.nodes()) {
    const TokenSequence q = build_query(f.vocab, node("monitor"), u);
    const auto d =
        predict_relation_distribution(f.cfg, f.params, f.vocab, ctx, q);
    const double top = *std::max_element(d.begin(), d.end());
    if (top > best_top) {
      best_top = top;
      expected_first = u;
      expected_dist = d;
    }
  }

  StitchPolicy policy;
  policy.pair_order = PairOrder::ConfidenceGreedy;
  policy.sampler.top_p = 1.0;
  policy.sampler.seed = 3;
  const ManipulationResult res =
      add_node(f.cfg, f.params, f.vocab, g, node("monitor"), policy);

  REQUIRE(res.predicted_edges.size() == 4);
  CHECK(res.predicted_edges[0].edge.dst == expected_first);

  // The reported confidence is that pair's model probability of the drawn
  // relation, before truncation.
  const int rel_idx =
      f.vocab.relation_id(res.predicted_edges[0].edge.rel) -
      f.vocab.relation_begin();
  CHECK(res.predicted_edges[0].confidence ==
        doctest::Approx(expected_dist[static_cast<std::size_t>(rel_idx)])
            .epsilon(1e-9));

  std::set<std::string> partners;
  for (const auto& pe : res.predicted_edges)
    partners.insert(pe.edge.dst.display());
  CHECK(partners ==
        std::set<std::string>{"chair_0", "desk_0", "lamp_0", "table_0"});
}

TEST_CASE("naive_change_edge relabels in place, preferring the family") {
  SceneGraph g;
  g.add_node(node("chair"));
  g.add_node(node("desk"));
  g.add_edge({node("chair"), node("desk"), "right"});
  g.add_edge({node("chair"), node("desk"), "bigger_than"});

  // left's inverse family holds right: the spatial edge is replaced.
  const SceneGraph a = naive_change_edge(g, {node("chair"), node("desk"), "left"});
  CHECK(a.has_edge({node("chair"), node("desk"), "left"}));
  CHECK_FALSE(a.has_edge({node("chair"), node("desk"), "right"}));
  CHECK(a.has_edge({node("chair"), node("desk"), "bigger_than"}));
  CHECK(a.edges().size() == 2);

  // smaller_than's family holds bigger_than: the size edge is replaced.
  const SceneGraph b =
      naive_change_edge(g, {node("chair"), node("desk"), "smaller_than"});
  CHECK(b.has_edge({node("chair"), node("desk"), "smaller_than"}));
  CHECK_FALSE(b.has_edge({node("chair"), node("desk"), "bigger_than"}));
  CHECK(b.has_edge({node("chair"), node("desk"), "right"}));
  CHECK(b.edges().size() == 2);

  // No family match: the first stored pair edge is sacrificed.
  const SceneGraph c =
      naive_change_edge(g, {node("chair"), node("desk"), "front"});
  CHECK(c.has_edge({node("chair"), node("desk"), "front"}));
  CHECK_FALSE(c.has_edge({node("chair"), node("desk"), "right"}));
  CHECK(c.has_edge({node("chair"), node("desk"), "bigger_than"}));
  CHECK(c.edges().size() == 2);

  // Relabelling an edge to itself is a no-op round trip.
  const SceneGraph d =
      naive_change_edge(g, {node("chair"), node("desk"), "right"});
  CHECK(d.has_edge({node("chair"), node("desk"), "right"}));
  CHECK(d.edges().size() == 2);

  // The input graph is untouched throughout.
  CHECK(g.edges().size() == 2);
  CHECK(g.has_edge({node("chair"), node("desk"), "right"}));
}

TEST_CASE("remove_node_op drops the node and exactly its incident edges") {
  GenConfig gc;
  gc.seed = 42;
  gc.min_nodes = 5;
  gc.max_nodes = 5;
  const Scene scene = generate_scene(gc);
  const SceneGraph& g = scene.graph;

  // Pick the busiest node so the cut is exercised for real.
  NodeRef victim = g.nodes().front();
  std::size_t best_degree = 0;
  for (const auto& u : g.nodes()) {
    const std::size_t deg = g.edges_incident(u).size();
    if (deg > best_degree) {
      best_degree = deg;
      victim = u;
    }
  }
  REQUIRE(best_degree >= 1);

  const SceneGraph out = remove_node_op(g, victim);
  CHECK_FALSE(out.has_node(victim));
  CHECK(out.nodes().size() == g.nodes().size() - 1);
  for (const auto& e : out.edges()) {
    CHECK(e.src != victim);
    CHECK(e.dst != victim);
    CHECK(g.has_edge(e));
  }
  std::size_t survivors = 0;
  for (const auto& e : g.edges())
    if (!(e.src == victim || e.dst == victim)) {
      ++survivors;
      CHECK(out.has_edge(e));
    }
  CHECK(out.edges().size() == survivors);
  CHECK(g.edges().size() == survivors + best_degree);

  // The source graph is untouched and the subgraph stays consistent.
  CHECK(g.has_node(victim));
  CHECK(check_consistency(out).consistent);
}

TEST_CASE("manipulation_result_to_json carries the full outcome") {
  ManipulationResult r;
  r.graph.add_node(node("chair"));
  r.graph.add_node(node("desk"));
  r.graph.add_edge({node("chair"), node("desk"), "right"});
  r.predicted_edges.push_back(
      PredictedEdge{{node("chair"), node("desk"), "right"}, 0.25});
  r.repaired_edges_dropped.push_back({node("chair"), node("desk"), "front"});
  r.attempts_used = 2;
  r.consistent = true;

  const std::string j = manipulation_result_to_json(r);
  CHECK(j.find("\"consistent\": true") != std::string::npos);
  CHECK(j.find("\"attempts_used\": 2") != std::string::npos);
  CHECK(j.find("\"confidence\": 0.25") != std::string::npos);
  CHECK(j.find("\"predicted_edges\"") != std::string::npos);
  CHECK(j.find("\"repaired_edges_dropped\"") != std::string::npos);
  CHECK(j.find("\"graph\"") != std::string::npos);
  CHECK(j.find("chair_0") != std::string::npos);
  CHECK(j.find("\"front\"") != std::string::npos);
  CHECK(!j.empty());
  CHECK(j.back() == '\n');

  // One confidence entry per predicted edge on a real run.
  Fixture f;
  SceneGraph g;
  g.add_node(node("chair"));
  g.add_node(node("desk"));
  g.add_node(node("lamp"));
  const ManipulationResult real =
      add_node(f.cfg, f.params, f.vocab, g, node("plant"), StitchPolicy{});
  const std::string rj = manipulation_result_to_json(real);
  CHECK(count_occurrences(rj, "\"confidence\"") ==
        real.predicted_edges.size());
}

TEST_CASE("the consistency flag always agrees with the checker") {
  Fixture f;
  SceneGraph g;
  g.add_node(node("chair"));
  g.add_node(node("desk"));
  g.add_node(node("table"));
  g.add_edge({node("desk"), node("chair"), "right"});

  StitchPolicy policy;
  policy.sampler.top_p = 1.0;
  policy.max_resample_attempts = 2;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    policy.sampler.seed = seed;
    const ManipulationResult res =
        stitch(f.cfg, f.params, f.vocab, g, node("table"), {}, policy);
    CHECK(res.consistent == check_consistency(res.graph).consistent);
    CHECK(res.consistent == is_spatially_consistent(res.graph));
  }
}
