// sgt: one binary for the whole pipeline — synthesize corpora, train the
// relation model, run Cut-And-Stitch edits, and evaluate the result.
//
// Exit codes: 0 success, 1 domain error (JSON diagnostic on stderr; `check`
// also exits 1 when the scene is inconsistent), 2 usage error.
//
// Machine-readable output (JSON) goes to stdout; human logs go to stderr.
// All randomness flows from the global --seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgt/consistency.hpp"
#include "sgt/corpus.hpp"
#include "sgt/evalkit.hpp"
#include "sgt/manipulator.hpp"
#include "sgt/model.hpp"
#include "sgt/rng.hpp"
#include "sgt/serialize.hpp"
#include "sgt/tokenizer.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file_or_stdin(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) sgt::fail(sgt::ErrorCode::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) sgt::fail(sgt::ErrorCode::IoError, "cannot write " + path);
  out << content;
  if (!out) sgt::fail(sgt::ErrorCode::IoError, "short write to " + path);
}

// Settings shared by every subcommand; registered on the root app, reachable
// after the subcommand name via fallthrough.
struct Globals {
  std::uint64_t seed = 0;
  std::string schema_path;
  bool verbose = false;

  sgt::Schema schema() const {
    if (schema_path.empty()) return sgt::default_schema();
    return sgt::schema_from_json(read_file_or_stdin(schema_path));
  }
  // Model-bearing commands take the schema from the checkpoint instead.
  void note_schema_ignored(const char* why) const {
    if (!schema_path.empty())
      std::cerr << "note: --schema ignored; " << why << "\n";
  }
};

sgt::Checkpoint load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) sgt::fail(sgt::ErrorCode::IoError, "cannot read " + path);
  return sgt::load_checkpoint(in);
}

// Accepts either triplet text or the JSON graph format (sniffed by the first
// non-space byte).
sgt::SceneGraph load_scene(const std::string& path, const sgt::Schema& schema,
                           int max_instances) {
  const std::string text = read_file_or_stdin(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{')
    return sgt::graph_from_json(text, schema);
  return sgt::load_triplets_text(text, schema, max_instances);
}

// ---- shared option bundles -------------------------------------------------

struct PolicyOpts {
  double top_p = 0.7;
  double temperature = 1.0;
  int attempts = 8;
  std::string accept = "all";
  std::string order = "context";
  bool repair = false;

  sgt::StitchPolicy to_policy(std::uint64_t seed) const {
    sgt::StitchPolicy p;
    p.pair_order = order == "greedy" ? sgt::PairOrder::ConfidenceGreedy
                                     : sgt::PairOrder::ContextOrder;
    p.edge_acceptance = accept == "top4" ? sgt::EdgeAcceptance::TopK
                                         : sgt::EdgeAcceptance::All;
    p.top_k = 4;
    p.max_resample_attempts = attempts;
    p.repair = repair;
    p.sampler.top_p = top_p;
    p.sampler.temperature = temperature;
    p.sampler.seed = seed;
    return p;
  }
};

void add_policy_opts(CLI::App* sub, PolicyOpts& o) {
  sub->add_option("--top-p", o.top_p,
                  "Nucleus sampling mass in (0, 1] (default 0.7)");
  sub->add_option("--temperature", o.temperature,
                  "Sampling temperature (default 1.0)");
  sub->add_option("--accept", o.accept,
                  "Edge acceptance: every sampled edge, or only the 4 most "
                  "confident (default all)")
      ->check(CLI::IsMember({"all", "top4"}));
  sub->add_option("--attempts", o.attempts,
                  "Whole-stitch resample attempts before giving up "
                  "(default 8)");
  sub->add_option("--order", o.order,
                  "Stitch pair order: context (graph order) or greedy "
                  "(most confident first) (default context)")
      ->check(CLI::IsMember({"context", "greedy"}));
  sub->add_flag("--repair", o.repair,
                "Drop low-confidence sampled edges until consistent");
}

void emit_result(const sgt::ManipulationResult& result,
                 const std::string& out_path) {
  if (!out_path.empty())
    write_file(out_path, sgt::save_triplets_text(result.graph));
  std::cout << sgt::manipulation_result_to_json(result);
}

// ---- subcommands -----------------------------------------------------------

struct GenOpts {
  std::string out;
  int count = 1000;
  int min_nodes = 3;
  int max_nodes = 6;
  double density = 0.6;
  double margin = 1.0;
  int max_edges = 0;
};

int run_gen(const GenOpts& o, const Globals& g) {
  g.note_schema_ignored("gen-data always uses the built-in catalog schema");
  sgt::GenConfig cfg;
  cfg.min_nodes = o.min_nodes;
  cfg.max_nodes = o.max_nodes;
  cfg.density = o.density;
  cfg.margin = o.margin;
  cfg.seed = g.seed;
  cfg.max_edges = o.max_edges;
  const auto scenes = sgt::generate_corpus(cfg, o.count);
  sgt::save_corpus_dir(o.out, scenes, cfg);

  std::size_t edges = 0;
  for (const auto& s : scenes) edges += s.graph.edges().size();
  std::cerr << "wrote " << scenes.size() << " scenes to " << o.out << "\n";
  nlohmann::json j;
  j["dir"] = o.out;
  j["scenes"] = scenes.size();
  j["seed"] = g.seed;
  j["total_edges"] = edges;
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct TrainOpts {
  std::string data;
  std::string ckpt;
  std::string profile = "desk";
  std::string log_path;
  std::string supervision = "full_token";
  int epochs = -1;
  int batch = -1;
  double lr = -1.0;
  double wd = -1.0;
  int patience = -1;
  double holdout_fraction = 0.1;
  int shuffle_copies = 3;
};

int run_train(const TrainOpts& o, const Globals& g) {
  g.note_schema_ignored("train reads the corpus with the built-in schema and "
                        "embeds it in the checkpoint");
  const sgt::Schema schema = sgt::default_schema();
  const int max_instances = 16;
  auto scenes = sgt::load_corpus_dir(o.data, schema, max_instances);
  if (scenes.empty())
    sgt::fail(sgt::ErrorCode::EmptyInput, "no scenes in " + o.data);

  const auto vocab = sgt::Vocabulary::build(schema, max_instances);
  sgt::ModelConfig cfg = o.profile == "paper"
                             ? sgt::paper_config(vocab.size())
                             : sgt::desk_config(vocab.size());

  // Drop scenes whose serialization cannot fit the profile's context window
  // (8 tokens per edge plus [EOS]).
  {
    const std::size_t before = scenes.size();
    std::erase_if(scenes, [&cfg](const sgt::SceneGraph& s) {
      return 8 * s.edges().size() + 1 >
             static_cast<std::size_t>(cfg.context_length);
    });
    if (scenes.size() != before)
      std::cerr << "note: skipped " << before - scenes.size() << " of "
                << before << " scenes too large for context length "
                << cfg.context_length << "\n";
    if (scenes.empty())
      sgt::fail(sgt::ErrorCode::EmptyInput,
                "every scene exceeds the model context");
  }
  if (o.epochs >= 0) cfg.max_epochs = o.epochs;
  if (o.batch > 0) cfg.batch_size = o.batch;
  if (o.lr > 0) cfg.learning_rate = o.lr;
  if (o.wd >= 0) cfg.weight_decay = o.wd;
  if (o.patience >= 0) cfg.patience = o.patience;
  cfg.supervision_mode = o.supervision == "predicate_only"
                             ? sgt::SupervisionMode::PredicateOnly
                             : sgt::SupervisionMode::FullToken;
  cfg.seed = g.seed;

  // Seeded scene-level split, then shuffle augmentation on the train half.
  std::vector<std::size_t> idx(scenes.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  sgt::Rng split_rng(sgt::derive_seed(g.seed, 0xD1CEull));
  split_rng.shuffle(idx);
  std::size_t holdout_count = 0;
  if (o.holdout_fraction > 0.0 && scenes.size() > 1) {
    holdout_count = static_cast<std::size_t>(
        o.holdout_fraction * static_cast<double>(scenes.size()) + 0.5);
    holdout_count = std::min(std::max<std::size_t>(holdout_count, 1),
                             scenes.size() - 1);
  }
  std::vector<sgt::SceneGraph> holdout, train_set;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i < holdout_count) holdout.push_back(scenes[idx[i]]);
    else train_set.push_back(scenes[idx[i]]);
  }
  const std::size_t originals = train_set.size();
  if (o.shuffle_copies > 0) {
    for (std::size_t i = 0; i < originals; ++i) {
      auto copies = sgt::shuffle_augment(
          train_set[i], o.shuffle_copies,
          sgt::derive_seed(g.seed, 0xA000ull + static_cast<std::uint64_t>(i)));
      for (auto& c : copies) train_set.push_back(std::move(c));
    }
  }
  std::cerr << "training on " << train_set.size() << " sequences ("
            << originals << " scenes + augmentation), holdout "
            << holdout.size() << "\n";

  const auto result = sgt::train(cfg, vocab, train_set, holdout);
  if (g.verbose)
    for (const auto& e : result.log.epochs)
      std::cerr << "epoch " << e.epoch << " train " << e.train_loss
                << " holdout " << e.holdout_loss << " lr " << e.lr << "\n";

  sgt::Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = result.params;
  ckpt.schema = schema;
  ckpt.max_instances = max_instances;
  {
    std::ofstream out(o.ckpt, std::ios::binary);
    if (!out) sgt::fail(sgt::ErrorCode::IoError, "cannot write " + o.ckpt);
    sgt::save_checkpoint(out, ckpt);
  }
  const std::string vocab_path =
      fs::path(o.ckpt).replace_extension(".vocab").string();
  {
    std::ofstream out(vocab_path, std::ios::binary);
    if (!out) sgt::fail(sgt::ErrorCode::IoError, "cannot write " + vocab_path);
    vocab.save(out);
  }
  if (!o.log_path.empty()) write_file(o.log_path, result.log.to_csv());

  std::size_t param_count = 0;
  result.params.visit(
      [&param_count](const std::string&, const sgt::ModelParams::Mat& m) {
        param_count += static_cast<std::size_t>(m.size());
      });

  nlohmann::json j;
  j["model"] = o.ckpt;
  j["vocab"] = vocab_path;
  j["profile"] = o.profile;
  j["parameters"] = param_count;
  j["epochs_run"] = result.log.epochs.size();
  j["best_epoch"] = result.log.best_epoch;
  j["stopped_early"] = result.log.stopped_early;
  if (!result.log.epochs.empty()) {
    j["final_train_loss"] = result.log.epochs.back().train_loss;
    if (!holdout.empty())
      j["final_holdout_loss"] = result.log.epochs.back().holdout_loss;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct ManipOpts {
  std::string ckpt;
  std::string graph;
  std::string out;
  std::string cls;
  int instance = 0;
};

int run_add_node(const ManipOpts& m, const PolicyOpts& po, const Globals& g) {
  g.note_schema_ignored("the checkpoint embeds its schema");
  const auto ckpt = load_model(m.ckpt);
  const auto vocab = sgt::Vocabulary::build(ckpt.schema, ckpt.max_instances);
  const auto scene = load_scene(m.graph, ckpt.schema, ckpt.max_instances);
  const sgt::NodeRef node{m.cls, m.instance};
  const auto result = sgt::add_node(ckpt.config, ckpt.params, vocab, scene,
                                    node, po.to_policy(g.seed));
  emit_result(result, m.out);
  return 0;
}

int run_change_edge(const ManipOpts& m, const std::string& src,
                    const std::string& dst, const std::string& rel,
                    const PolicyOpts& po, const Globals& g) {
  g.note_schema_ignored("the checkpoint embeds its schema");
  const auto ckpt = load_model(m.ckpt);
  const auto vocab = sgt::Vocabulary::build(ckpt.schema, ckpt.max_instances);
  const auto scene = load_scene(m.graph, ckpt.schema, ckpt.max_instances);
  const sgt::Edge edge{sgt::parse_node(src), sgt::parse_node(dst), rel};
  const auto result = sgt::change_edge(ckpt.config, ckpt.params, vocab, scene,
                                       edge, po.to_policy(g.seed));
  emit_result(result, m.out);
  return 0;
}

int run_remove_node(const ManipOpts& m, const Globals& g) {
  const auto schema = g.schema();
  const auto scene = load_scene(m.graph, schema, 16);
  const sgt::NodeRef node{m.cls, m.instance};
  // Pure deletion: report in the shared manipulation shape with no
  // predictions and no attempts.
  sgt::ManipulationResult result;
  result.graph = sgt::remove_node_op(scene, node);
  result.attempts_used = 0;
  result.consistent = sgt::is_spatially_consistent(result.graph);
  emit_result(result, m.out);
  return 0;
}

int run_check(const std::string& graph_path, const Globals& g) {
  const auto schema = g.schema();
  const auto scene = load_scene(graph_path, schema, 16);
  const auto report = sgt::check_consistency(scene);
  std::cout << sgt::consistency_report_to_json(report) << "\n";
  return report.consistent ? 0 : 1;
}

struct EvalOpts {
  std::string ckpt;
  std::string scenes;
  std::string report_path;
  std::string ranks_csv;
  double holdout_fraction = 0.2;
  bool cycle_bench = false;
  int bench_count = 0;  // 0 = every eligible scene
};

int run_eval(const EvalOpts& o, const PolicyOpts& po, const Globals& g) {
  g.note_schema_ignored("the checkpoint embeds its schema");
  const auto ckpt = load_model(o.ckpt);
  const auto vocab = sgt::Vocabulary::build(ckpt.schema, ckpt.max_instances);
  auto scenes =
      sgt::load_corpus_dir(o.scenes, ckpt.schema, ckpt.max_instances);

  // Keep only scenes the model can consume: ranking adds a 6-token query to
  // the serialized scene; the cycle bench additionally re-stitches up to one
  // edge per node on top of the untouched remainder.
  {
    const std::size_t before = scenes.size();
    const auto ctx = static_cast<std::size_t>(ckpt.config.context_length);
    std::erase_if(scenes, [&](const sgt::SceneGraph& s) {
      const std::size_t load =
          o.cycle_bench ? s.edges().size() + s.nodes().size()
                        : s.edges().size();
      return 8 * load + 7 > ctx;
    });
    if (scenes.size() != before)
      std::cerr << "note: skipped " << before - scenes.size() << " of "
                << before << " scenes too large for context length " << ctx
                << "\n";
  }

  const auto outcomes =
      sgt::edge_eval_outcomes(ckpt.config, ckpt.params, vocab, scenes,
                              o.holdout_fraction, g.seed);
  std::vector<int> ranks;
  ranks.reserve(outcomes.size());
  for (const auto& oc : outcomes) ranks.push_back(oc.rank);

  sgt::BenchReport report;
  report.n_queries = static_cast<int>(ranks.size());
  report.mr = sgt::mean_rank(ranks);
  report.mrr = sgt::mean_reciprocal_rank(ranks);
  report.hit_at[1] = sgt::hit_at_k(ranks, 1);
  report.hit_at[3] = sgt::hit_at_k(ranks, 3);
  report.hit_at[10] = sgt::hit_at_k(ranks, 10);
  std::cerr << "ranked " << report.n_queries << " held-out edges: MR "
            << report.mr << ", Hit@1 " << report.hit_at[1] << "\n";

  nlohmann::json j = nlohmann::json::parse(sgt::bench_report_to_json(report));

  if (o.cycle_bench) {
    auto commands = sgt::make_cycle_commands(scenes, g.seed);
    if (o.bench_count > 0 &&
        commands.size() > static_cast<std::size_t>(o.bench_count))
      commands.resize(static_cast<std::size_t>(o.bench_count));
    const auto policy = po.to_policy(g.seed);
    const auto ours = sgt::run_cycle_bench(ckpt.config, ckpt.params, vocab,
                                           scenes, commands,
                                           sgt::ManipMethod::SgTailor, policy);
    const auto naive = sgt::run_cycle_bench(ckpt.config, ckpt.params, vocab,
                                            scenes, commands,
                                            sgt::ManipMethod::Naive, policy);
    std::cerr << "cycle bench over " << commands.size()
              << " edge changes: ours " << ours.cycle_rate_total << ", naive "
              << naive.cycle_rate_total << "\n";
    // Headline cycle rates are the tailored method's; both full reports ride
    // along under cycle_bench.
    j["cycle_rate_right"] = ours.cycle_rate_right;
    j["cycle_rate_front"] = ours.cycle_rate_front;
    j["cycle_rate_total"] = ours.cycle_rate_total;
    j["cycle_bench"]["sg_tailor"] =
        nlohmann::json::parse(sgt::bench_report_to_json(ours));
    j["cycle_bench"]["naive"] =
        nlohmann::json::parse(sgt::bench_report_to_json(naive));
  }

  if (!o.ranks_csv.empty()) {
    std::ostringstream csv;
    csv << "query,src,dst,truth,rank\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& oc = outcomes[i];
      csv << i << "," << oc.src.display() << "," << oc.dst.display() << ","
          << oc.truth << "," << oc.rank << "\n";
    }
    write_file(o.ranks_csv, csv.str());
  }

  const std::string text = j.dump(2) + "\n";
  if (!o.report_path.empty()) write_file(o.report_path, text);
  std::cout << text;
  return 0;
}

int run_export_dot(const std::string& graph_path, const std::string& out,
                   const Globals& g) {
  const auto schema = g.schema();
  const auto scene = load_scene(graph_path, schema, 16);
  const std::string dot = sgt::to_dot(scene);
  if (out.empty()) std::cout << dot;
  else write_file(out, dot);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sgt — scene-graph generation, training, and tailoring"};
  app.set_version_flag("--version", "sgt 0.1.0");
  app.require_subcommand(1);
  app.fallthrough();  // global flags also parse after the subcommand name

  Globals glob;
  app.add_option("--seed", glob.seed,
                 "Seed for every random choice in the run (default 0)");
  app.add_option("--schema", glob.schema_path,
                 "Schema JSON overriding the built-in one where applicable");
  app.add_flag("--verbose", glob.verbose, "Chattier progress logs on stderr");

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--count", gen.count,
                      "Number of scenes (default 1000)");
  gen_cmd->add_option("--min-nodes", gen.min_nodes,
                      "Minimum objects per scene (default 3)");
  gen_cmd->add_option("--max-nodes", gen.max_nodes,
                      "Maximum objects per scene (default 6)");
  gen_cmd->add_option("--density", gen.density,
                      "Probability a derivable relation is kept "
                      "(default 0.6)");
  gen_cmd->add_option("--margin", gen.margin,
                      "Minimum separation for spatial relations "
                      "(default 1.0)");
  gen_cmd->add_option("--max-edges", gen.max_edges,
                      "Edge cap per scene, 0 = unlimited (default 0)");

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "Train the relation model");
  train_cmd->add_option("--data", tr.data, "Corpus directory")->required();
  train_cmd->add_option("--ckpt", tr.ckpt, "Checkpoint path (.sgtm)")
      ->required();
  train_cmd->add_option("--profile", tr.profile,
                        "Model size profile (default desk)")
      ->check(CLI::IsMember({"desk", "paper"}));
  train_cmd->add_option("--epochs", tr.epochs,
                        "Maximum epochs (default: profile value)");
  train_cmd->add_option("--batch", tr.batch,
                        "Batch size (default: profile value)");
  train_cmd->add_option("--lr", tr.lr,
                        "Peak learning rate (default: profile value)");
  train_cmd->add_option("--wd", tr.wd,
                        "Weight decay (default: profile value)");
  train_cmd->add_option("--patience", tr.patience,
                        "Early-stopping patience in epochs "
                        "(default: profile value)");
  train_cmd->add_option("--holdout-fraction", tr.holdout_fraction,
                        "Scene fraction reserved for early stopping "
                        "(default 0.1)");
  train_cmd->add_option("--shuffle-copies", tr.shuffle_copies,
                        "Shuffled copies per training scene (default 3)");
  train_cmd->add_option("--supervision", tr.supervision,
                        "Loss mask (default full_token)")
      ->check(CLI::IsMember({"full_token", "predicate_only"}));
  train_cmd->add_option("--log", tr.log_path, "Write per-epoch CSV here");

  ManipOpts add_m;
  PolicyOpts add_po;
  auto* add_cmd = app.add_subcommand("add-node", "Stitch a new node in");
  add_cmd->add_option("--graph", add_m.graph,
                      "Scene file, triplet text or graph JSON (- for stdin)")
      ->required();
  add_cmd->add_option("--class", add_m.cls, "Class of the new node")
      ->required();
  add_cmd->add_option("--instance", add_m.instance,
                      "Instance index of the new node")
      ->required();
  add_cmd->add_option("--ckpt", add_m.ckpt, "Model checkpoint")->required();
  add_cmd->add_option("--out", add_m.out, "Write resulting triplets here");
  add_policy_opts(add_cmd, add_po);

  ManipOpts ch_m;
  std::string ch_src, ch_dst, ch_rel;
  PolicyOpts ch_po;
  auto* ch_cmd = app.add_subcommand("change-edge",
                                    "Re-pin one relation and re-stitch");
  ch_cmd->add_option("--graph", ch_m.graph,
                     "Scene file, triplet text or graph JSON (- for stdin)")
      ->required();
  ch_cmd->add_option("--src", ch_src, "Subject node, e.g. chair_1")
      ->required();
  ch_cmd->add_option("--dst", ch_dst, "Object node, e.g. bed_0")->required();
  ch_cmd->add_option("--rel", ch_rel, "New relation")->required();
  ch_cmd->add_option("--ckpt", ch_m.ckpt, "Model checkpoint")->required();
  ch_cmd->add_option("--out", ch_m.out, "Write resulting triplets here");
  add_policy_opts(ch_cmd, ch_po);

  ManipOpts rm_m;
  PolicyOpts rm_po;  // accepted for symmetry; removal draws no samples
  auto* rm_cmd = app.add_subcommand("remove-node",
                                    "Cut a node and its edges");
  rm_cmd->add_option("--graph", rm_m.graph,
                     "Scene file, triplet text or graph JSON (- for stdin)")
      ->required();
  rm_cmd->add_option("--class", rm_m.cls, "Class of the node to remove")
      ->required();
  rm_cmd->add_option("--instance", rm_m.instance,
                     "Instance index of the node to remove")
      ->required();
  rm_cmd->add_option("--ckpt", rm_m.ckpt,
                     "Accepted for interface symmetry; removal uses no model");
  rm_cmd->add_option("--out", rm_m.out, "Write resulting triplets here");
  add_policy_opts(rm_cmd, rm_po);

  std::string check_graph;
  auto* check_cmd = app.add_subcommand("check",
                                       "Spatial-consistency reasonableness "
                                       "check (exit 1 when inconsistent)");
  check_cmd->add_option("--graph", check_graph,
                        "Scene file, triplet text or graph JSON (- for stdin)")
      ->required();

  EvalOpts ev;
  PolicyOpts ev_po;
  auto* eval_cmd = app.add_subcommand("eval",
                                      "Ranking metrics and cycle benchmark");
  eval_cmd->add_option("--ckpt", ev.ckpt, "Model checkpoint")->required();
  eval_cmd->add_option("--scenes", ev.scenes, "Corpus directory")->required();
  eval_cmd->add_option("--report", ev.report_path, "Write the JSON here too");
  eval_cmd->add_option("--ranks-csv", ev.ranks_csv,
                       "Write per-query ranks as CSV here");
  eval_cmd->add_option("--holdout-fraction", ev.holdout_fraction,
                       "Edge fraction held out per scene (default 0.2)");
  eval_cmd->add_flag("--cycle-bench", ev.cycle_bench,
                     "Also compare against the naive editor");
  eval_cmd->add_option("--bench-count", ev.bench_count,
                       "Cap cycle-bench commands, 0 = all (default 0)");
  add_policy_opts(eval_cmd, ev_po);

  std::string dot_graph, dot_out;
  auto* dot_cmd = app.add_subcommand("export-dot", "Render a scene as DOT");
  dot_cmd->add_option("--graph", dot_graph,
                      "Scene file, triplet text or graph JSON (- for stdin)")
      ->required();
  dot_cmd->add_option("--out", dot_out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen, glob);
    if (train_cmd->parsed()) return run_train(tr, glob);
    if (add_cmd->parsed()) return run_add_node(add_m, add_po, glob);
    if (ch_cmd->parsed())
      return run_change_edge(ch_m, ch_src, ch_dst, ch_rel, ch_po, glob);
    if (rm_cmd->parsed()) return run_remove_node(rm_m, glob);
    if (check_cmd->parsed()) return run_check(check_graph, glob);
    if (eval_cmd->parsed()) return run_eval(ev, ev_po, glob);
    if (dot_cmd->parsed()) return run_export_dot(dot_graph, dot_out, glob);
  } catch (const sgt::Error& err) {
    nlohmann::json j;
    j["error"] = sgt::error_code_name(err.code());
    j["message"] = err.what();
    std::cerr << j.dump() << "\n";
    return 1;
  } catch (const std::exception& err) {
    nlohmann::json j;
    j["error"] = "InternalError";
    j["message"] = err.what();
    std::cerr << j.dump() << "\n";
    return 1;
  }
  return 2;  // unreachable: require_subcommand(1) guarantees a match
}
