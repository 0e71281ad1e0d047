#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sgt/model.hpp"
#include "sgt/rng.hpp"

using namespace sgt;

namespace {

Vocabulary default_vocab() { return Vocabulary::build(default_schema(), 16); }

SceneGraph tiny_graph() {
  SceneGraph g;
  g.add_node(NodeRef{"chair", 1});
  g.add_node(NodeRef{"desk", 1});
  g.add_node(NodeRef{"lamp", 0});
  g.add_edge({NodeRef{"chair", 1}, NodeRef{"desk", 1}, "right"});
  g.add_edge({NodeRef{"lamp", 0}, NodeRef{"desk", 1}, "standing_on"});
  return g;
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.vocab_size = 39;
  cfg.context_length = 48;
  cfg.hidden_size = 16;
  cfg.num_heads = 1;
  cfg.num_layers = 2;
  cfg.seed = 12;
  return cfg;
}

// Flattened coordinate access across every parameter array, in visit order.
template <typename S>
std::vector<typename TParams<S>::Mat*> mats_of(TParams<S>& p) {
  std::vector<typename TParams<S>::Mat*> out;
  p.visit([&out](const std::string&, typename TParams<S>::Mat& m) {
    out.push_back(&m);
  });
  return out;
}

}  // namespace

TEST_CASE("config validation and profiles") {
  const ModelConfig desk = desk_config(39);
  CHECK(desk.hidden_size == 128);
  CHECK(desk.num_heads == 4);
  CHECK(desk.num_layers == 4);
  CHECK(desk.context_length == 256);
  CHECK_NOTHROW(desk.validate());

  const ModelConfig paper = paper_config(39);
  CHECK(paper.hidden_size == 768);
  CHECK(paper.num_heads == 12);
  CHECK(paper.num_layers == 12);
  CHECK(paper.context_length == 1024);
  CHECK_NOTHROW(paper.validate());

  ModelConfig bad = desk;
  bad.hidden_size = 130;  // not divisible by 4 heads
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = desk;
  bad.context_length = 7;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = desk;
  bad.vocab_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("weight decay hits weight matrices only") {
  CHECK(is_decayed_param("head.w"));
  CHECK(is_decayed_param("layers.0.attn.wq"));
  CHECK(is_decayed_param("layers.3.mlp.w2"));
  CHECK_FALSE(is_decayed_param("layers.0.attn.bq"));
  CHECK_FALSE(is_decayed_param("layers.1.ln1.gamma"));
  CHECK_FALSE(is_decayed_param("final_ln.beta"));
  CHECK_FALSE(is_decayed_param("tok_emb"));
  CHECK_FALSE(is_decayed_param("pos_emb"));
}

TEST_CASE("init_params: shapes, zero head, determinism") {
  const ModelConfig cfg = tiny_config();
  ModelParams p = init_params<float>(cfg);
  CHECK(p.tok_emb.rows() == 39);
  CHECK(p.tok_emb.cols() == 16);
  CHECK(p.pos_emb.rows() == 48);
  CHECK(p.layers.size() == 2);
  CHECK(p.layers[0].w1.rows() == 16);
  CHECK(p.layers[0].w1.cols() == 64);
  CHECK(p.head_w.isZero());
  CHECK(p.layers[0].ln1_g.isOnes());

  ModelParams q = init_params<float>(cfg);
  bool identical = true;
  const auto pm = mats_of(p);
  const auto qm = mats_of(q);
  REQUIRE(pm.size() == qm.size());
  for (std::size_t i = 0; i < pm.size(); ++i)
    if (*pm[i] != *qm[i]) identical = false;
  CHECK(identical);

  ModelConfig other = cfg;
  other.seed = 13;
  ModelParams r = init_params<float>(other);
  CHECK(r.tok_emb != p.tok_emb);
}

TEST_CASE("make_train_batch: exact layout for one quintuple frame") {
  const Vocabulary v = default_vocab();
  SceneGraph g;
  g.add_node(NodeRef{"chair", 1});
  g.add_node(NodeRef{"desk", 1});
  g.add_edge({NodeRef{"chair", 1}, NodeRef{"desk", 1}, "right"});
  const TokenSequence s = encode_graph(v, g, 48);  // 9 tokens
  REQUIRE(s.size() == 9);

  const TrainBatch full = make_train_batch({s}, 12, SupervisionMode::FullToken);
  CHECK(full.rows == 1);
  CHECK(full.width == 12);
  for (int t = 0; t < 9; ++t)
    CHECK(full.input[static_cast<std::size_t>(t)] ==
          s.ids[static_cast<std::size_t>(t)]);
  for (int t = 9; t < 12; ++t)
    CHECK(full.input[static_cast<std::size_t>(t)] == Vocabulary::kPad);
  // Shifted targets with the final [EOS] included in the loss.
  for (int t = 0; t + 1 < 9; ++t) {
    CHECK(full.target[static_cast<std::size_t>(t)] ==
          s.ids[static_cast<std::size_t>(t) + 1]);
    CHECK(full.mask[static_cast<std::size_t>(t)] == 1);
  }
  for (int t = 8; t < 12; ++t)
    CHECK(full.mask[static_cast<std::size_t>(t)] == 0);

  const TrainBatch pred =
      make_train_batch({s}, 12, SupervisionMode::PredicateOnly);
  int supervised = 0;
  for (int t = 0; t < 12; ++t) supervised += pred.mask[static_cast<std::size_t>(t)];
  CHECK(supervised == 1);
  CHECK(pred.mask[5] == 1);  // position predicting the relation token
  CHECK(pred.target[5] == v.relation_id("right"));
}

TEST_CASE("make_train_batch: open query rows are not supervised (full mode)") {
  const Vocabulary v = default_vocab();
  SceneGraph g;
  g.add_node(NodeRef{"chair", 1});
  g.add_node(NodeRef{"desk", 1});
  g.add_edge({NodeRef{"chair", 1}, NodeRef{"desk", 1}, "right"});
  TokenSequence s = encode_graph(v, g, 48);
  s.ids.pop_back();  // drop [EOS]
  s.roles.pop_back();
  const TokenSequence q =
      build_query(v, NodeRef{"chair", 1}, NodeRef{"desk", 1});
  s.append(q);  // 8 + 6 = 14 tokens, ends with [SEP]
  REQUIRE(s.size() == 14);
  REQUIRE(s.ids.back() == Vocabulary::kSep);

  const TrainBatch b = make_train_batch({s}, 16, SupervisionMode::FullToken);
  // Positions 0..7 supervise the context frame and the query's [BOQ];
  // positions 8..12 sit inside the open query frame and must be masked out.
  for (int t = 0; t < 8; ++t) CHECK(b.mask[static_cast<std::size_t>(t)] == 1);
  for (int t = 8; t < 16; ++t) CHECK(b.mask[static_cast<std::size_t>(t)] == 0);
}

TEST_CASE("make_train_batch errors") {
  CHECK_THROWS_AS(make_train_batch({}, 8, SupervisionMode::FullToken), Error);
  const Vocabulary v = default_vocab();
  const TokenSequence s = encode_graph(v, tiny_graph(), 48);  // 17 tokens
  try {
    make_train_batch({s}, 16, SupervisionMode::FullToken);
    FAIL("expected ContextOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ContextOverflow);
  }
}

TEST_CASE("uniform-output init: loss equals ln(vocab) within 1 percent") {
  const Vocabulary v = default_vocab();
  ModelConfig cfg = tiny_config();
  const ModelParams p = init_params<float>(cfg);

  const TokenSequence s1 = encode_graph(v, tiny_graph(), 48);
  SceneGraph g2;
  g2.add_node(NodeRef{"bed", 0});
  g2.add_node(NodeRef{"wardrobe", 0});
  g2.add_edge({NodeRef{"bed", 0}, NodeRef{"wardrobe", 0}, "front"});
  const TokenSequence s2 = encode_graph(v, g2, 48);

  for (auto mode : {SupervisionMode::FullToken, SupervisionMode::PredicateOnly}) {
    const TrainBatch b = make_train_batch({s1, s2}, 24, mode);
    const double l = loss(cfg, p, b);
    const double expect = std::log(39.0);
    CHECK(std::abs(l - expect) / expect < 0.01);
  }
}

TEST_CASE("forward: shape, causality, input validation") {
  ModelConfig cfg = tiny_config();
  ModelParamsF64 p = init_params<double>(cfg);
  // The zero head hides everything; give it signal for the causality probe.
  Rng rng(5);
  for (long r = 0; r < p.head_w.rows(); ++r)
    for (long c = 0; c < p.head_w.cols(); ++c)
      p.head_w(r, c) = rng.normal() * 0.05;

  const Vocabulary v = default_vocab();
  TokenSequence s = encode_graph(v, tiny_graph(), 48);
  const auto logits = forward<double>(cfg, p, s.ids);
  CHECK(logits.rows() == static_cast<long>(s.size()));
  CHECK(logits.cols() == 39);

  // Mutate a suffix token: rows before the edit are bit-identical, the
  // edited row onward changes.
  std::vector<int> altered = s.ids;
  const std::size_t cut = 9;
  altered[cut] = v.class_id("bed");
  REQUIRE(altered[cut] != s.ids[cut]);
  const auto logits2 = forward<double>(cfg, p, altered);
  for (std::size_t t = 0; t < cut; ++t)
    for (long c = 0; c < logits.cols(); ++c)
      REQUIRE(logits(static_cast<long>(t), c) ==
              logits2(static_cast<long>(t), c));
  bool suffix_changed = false;
  for (std::size_t t = cut; t < s.size(); ++t)
    for (long c = 0; c < logits.cols(); ++c)
      if (logits(static_cast<long>(t), c) != logits2(static_cast<long>(t), c))
        suffix_changed = true;
  CHECK(suffix_changed);

  CHECK_THROWS_AS(forward<double>(cfg, p, std::vector<int>{}), Error);
  CHECK_THROWS_AS(forward<double>(cfg, p, std::vector<int>{0, 99}), Error);
  CHECK_THROWS_AS(forward<double>(cfg, p, std::vector<int>(49, 0)), Error);
}

TEST_CASE("gradient check: analytic matches central differences") {
  const Vocabulary v = default_vocab();
  ModelConfig cfg = tiny_config();

  const TokenSequence s1 = encode_graph(v, tiny_graph(), 48);
  SceneGraph g2;
  g2.add_node(NodeRef{"plant", 2});
  g2.add_node(NodeRef{"shelf", 1});
  g2.add_edge({NodeRef{"plant", 2}, NodeRef{"shelf", 1}, "standing_on"});
  g2.add_edge({NodeRef{"shelf", 1}, NodeRef{"plant", 2}, "bigger_than"});
  const TokenSequence s2 = encode_graph(v, g2, 48);

  for (auto mode : {SupervisionMode::FullToken, SupervisionMode::PredicateOnly}) {
    cfg.supervision_mode = mode;
    const TrainBatch b = make_train_batch({s1, s2}, 24, mode);

    ModelParamsF64 p = init_params<double>(cfg);
    // Zero-init head would zero most of the interesting gradient paths, so
    // perturb it slightly (still near-uniform outputs).
    Rng hrng(99);
    for (long r = 0; r < p.head_w.rows(); ++r)
      for (long c = 0; c < p.head_w.cols(); ++c)
        p.head_w(r, c) = hrng.normal() * 0.02;

    ModelParamsF64 grads;
    const double base = loss_and_gradients<double>(cfg, p, b, grads);
    CHECK(std::isfinite(base));
    CHECK(loss<double>(cfg, p, b) == doctest::Approx(base).epsilon(1e-12));

    auto pm = mats_of(p);
    auto gm = mats_of(grads);
    REQUIRE(pm.size() == gm.size());

    std::size_t total = 0;
    for (const auto* m : pm) total += static_cast<std::size_t>(m->size());

    const double h = 1e-5;
    Rng rng(mode == SupervisionMode::FullToken ? 41 : 42);
    double max_rel = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
      std::size_t flat = rng.below(total);
      std::size_t k = 0;
      while (flat >= static_cast<std::size_t>(pm[k]->size())) {
        flat -= static_cast<std::size_t>(pm[k]->size());
        ++k;
      }
      double* coord = pm[k]->data() + flat;
      const double saved = *coord;
      *coord = saved + h;
      const double up = loss<double>(cfg, p, b);
      *coord = saved - h;
      const double down = loss<double>(cfg, p, b);
      *coord = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double analytic = gm[k]->data()[flat];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-4);
  }
}

TEST_CASE("loss_and_gradients reuses a preallocated gradient object") {
  const Vocabulary v = default_vocab();
  ModelConfig cfg = tiny_config();
  const ModelParamsF64 p = init_params<double>(cfg);
  const TrainBatch b = make_train_batch({encode_graph(v, tiny_graph(), 48)}, 24,
                                        SupervisionMode::FullToken);

  ModelParamsF64 grads;
  loss_and_gradients<double>(cfg, p, b, grads);
  const auto before = mats_of(grads);
  std::vector<const double*> ptrs;
  for (auto* m : before) ptrs.push_back(m->data());

  loss_and_gradients<double>(cfg, p, b, grads);  // same shapes: in-place
  const auto after = mats_of(grads);
  for (std::size_t i = 0; i < after.size(); ++i)
    CHECK(after[i]->data() == ptrs[i]);
}

TEST_CASE("gradients vanish for unused token embeddings") {
  const Vocabulary v = default_vocab();
  ModelConfig cfg = tiny_config();
  ModelParamsF64 p = init_params<double>(cfg);
  // A zero head blocks every upstream gradient path; open it slightly.
  Rng hrng(7);
  for (long r = 0; r < p.head_w.rows(); ++r)
    for (long c = 0; c < p.head_w.cols(); ++c)
      p.head_w(r, c) = hrng.normal() * 0.02;
  const TokenSequence s = encode_graph(v, tiny_graph(), 48);
  const TrainBatch b = make_train_batch({s}, 24, SupervisionMode::FullToken);

  ModelParamsF64 grads;
  loss_and_gradients<double>(cfg, p, b, grads);

  std::vector<bool> used(39, false);
  for (int id : b.input) used[static_cast<std::size_t>(id)] = true;
  bool any_used_nonzero = false;
  for (int t = 0; t < 39; ++t) {
    const double norm = grads.tok_emb.row(t).cwiseAbs().sum();
    if (!used[static_cast<std::size_t>(t)])
      CHECK(norm == 0.0);
    else if (norm > 0.0)
      any_used_nonzero = true;
  }
  CHECK(any_used_nonzero);
}

TEST_CASE("predict_relation_distribution: uniform at init, sums to one") {
  const Vocabulary v = default_vocab();
  ModelConfig cfg = tiny_config();
  const ModelParams p = init_params<float>(cfg);

  SceneGraph g = tiny_graph();
  const TokenSequence context = encode_graph(v, g, 48);  // trailing EOS ok
  const TokenSequence q =
      build_query(v, NodeRef{"chair", 1}, NodeRef{"lamp", 0});
  const auto dist = predict_relation_distribution(cfg, p, v, context, q);
  REQUIRE(dist.size() == 7);
  double sum = 0.0;
  for (double x : dist) {
    CHECK(x == doctest::Approx(1.0 / 7.0).epsilon(1e-5));
    sum += x;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("top_p_candidates: exact truncation semantics") {
  const std::vector<double> dist = {0.5, 0.3, 0.15, 0.05};

  const auto kept = top_p_candidates(dist, 0.7);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].first == 0);
  CHECK(kept[1].first == 1);
  CHECK(kept[0].second == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(kept[1].second == doctest::Approx(0.375).epsilon(1e-12));

  // p = 1 keeps everything (cumulative never exceeds 1).
  CHECK(top_p_candidates(dist, 1.0).size() == 4);
  // Tiny p keeps exactly the argmax.
  const auto top1 = top_p_candidates(dist, 0.01);
  REQUIRE(top1.size() == 1);
  CHECK(top1[0].first == 0);
  CHECK(top1[0].second == doctest::Approx(1.0));

  // Ties break by ascending index.
  const auto tied = top_p_candidates({0.4, 0.4, 0.2}, 0.3);
  REQUIRE(tied.size() == 1);
  CHECK(tied[0].first == 0);
  const auto tied2 = top_p_candidates({0.4, 0.4, 0.2}, 0.5);
  REQUIRE(tied2.size() == 2);
  CHECK(tied2[0].first == 0);
  CHECK(tied2[1].first == 1);

  CHECK_THROWS_AS(top_p_candidates({}, 0.5), Error);
  CHECK_THROWS_AS(top_p_candidates(dist, 0.0), Error);
  CHECK_THROWS_AS(top_p_candidates(dist, 1.5), Error);
}

TEST_CASE("top-p sampling: empirical frequencies match the truncated dist") {
  const std::vector<double> dist = {0.5, 0.3, 0.15, 0.05};
  Rng rng(20240816);
  int counts[4] = {0, 0, 0, 0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Draw d = sample_top_p(dist, 0.7, 1.0, rng);
    REQUIRE(d.index >= 0);
    REQUIRE(d.index <= 1);  // support is exactly {0, 1}
    CHECK(d.confidence == dist[static_cast<std::size_t>(d.index)]);
    ++counts[d.index];
  }
  CHECK(std::abs(counts[0] / double(n) - 0.625) < 0.01);
  CHECK(std::abs(counts[1] / double(n) - 0.375) < 0.01);

  // Deterministic one-shot wrapper: same seed, same draw.
  SamplerConfig cfg;
  cfg.top_p = 0.7;
  cfg.seed = 7;
  const int first = sample_top_p(dist, cfg);
  CHECK(sample_top_p(dist, cfg) == first);

  // Low temperature sharpens toward the argmax.
  Rng cold(3);
  for (int i = 0; i < 200; ++i)
    CHECK(sample_top_p(dist, 0.7, 0.05, cold).index == 0);
  CHECK_THROWS_AS(sample_top_p(dist, 0.7, 0.0, cold), Error);
}

TEST_CASE("checkpoint round trip preserves everything") {
  ModelConfig cfg = tiny_config();
  cfg.supervision_mode = SupervisionMode::PredicateOnly;
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = init_params<float>(cfg);
  ckpt.schema = default_schema();
  ckpt.max_instances = 16;

  std::ostringstream out(std::ios::binary);
  save_checkpoint(out, ckpt);
  const std::string bytes = out.str();
  CHECK(bytes.compare(0, 4, "SGTM") == 0);

  std::istringstream in(bytes, std::ios::binary);
  const Checkpoint back = load_checkpoint(in);
  CHECK(back.config.vocab_size == cfg.vocab_size);
  CHECK(back.config.hidden_size == cfg.hidden_size);
  CHECK(back.config.num_layers == cfg.num_layers);
  CHECK(back.config.supervision_mode == SupervisionMode::PredicateOnly);
  CHECK(back.config.seed == cfg.seed);
  CHECK(back.max_instances == 16);
  CHECK(back.schema.classes == default_schema().classes);
  CHECK(back.schema.relations == default_schema().relations);
  CHECK(back.schema.inverses == default_schema().inverses);

  ModelParams& a = ckpt.params;
  ModelParams b = back.params;
  const auto am = mats_of(a);
  const auto bm = mats_of(b);
  REQUIRE(am.size() == bm.size());
  for (std::size_t i = 0; i < am.size(); ++i)
    CHECK(std::memcmp(am[i]->data(), bm[i]->data(),
                      sizeof(float) *
                          static_cast<std::size_t>(am[i]->size())) == 0);

  // Round trip through save again: byte-identical artifacts.
  std::ostringstream out2(std::ios::binary);
  Checkpoint again = back;
  save_checkpoint(out2, again);
  CHECK(out2.str() == bytes);
}

TEST_CASE("checkpoint corruption is rejected with precise codes") {
  ModelConfig cfg = tiny_config();
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = init_params<float>(cfg);
  ckpt.schema = default_schema();
  std::ostringstream out(std::ios::binary);
  save_checkpoint(out, ckpt);
  const std::string good = out.str();

  const auto expect_code = [](std::string bytes, ErrorCode code) {
    std::istringstream in(bytes, std::ios::binary);
    try {
      load_checkpoint(in);
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  expect_code(bad_magic, ErrorCode::FormatError);

  std::string bad_version = good;
  bad_version[4] = 2;  // little-endian u32 version
  expect_code(bad_version, ErrorCode::VersionMismatch);

  expect_code(good.substr(0, good.size() / 2), ErrorCode::FormatError);
  expect_code(good.substr(0, 10), ErrorCode::FormatError);

  // Arrays shaped for a different config than the header claims.
  Checkpoint lying = ckpt;
  ModelConfig fatter = cfg;
  fatter.hidden_size = 32;
  fatter.num_heads = 2;
  lying.params = init_params<float>(fatter);
  std::ostringstream out2(std::ios::binary);
  save_checkpoint(out2, lying);
  expect_code(out2.str(), ErrorCode::ShapeMismatch);
}
