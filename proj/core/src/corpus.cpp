#include "sgt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sgt/rng.hpp"

namespace sgt {
namespace {

constexpr double kSizeRatio = 1.5;

// RNG stream tags.
constexpr std::uint64_t kStreamPlace = 0x01;
constexpr std::uint64_t kStreamDerive = 0x02;
constexpr std::uint64_t kStreamScene = 0x100;

std::optional<int> catalog_index(const std::string& cls) {
  const auto& cat = default_catalog();
  for (std::size_t i = 0; i < cat.size(); ++i)
    if (cat[i].cls == cls) return static_cast<int>(i);
  return std::nullopt;
}

}  // namespace

const std::vector<CatalogEntry>& default_catalog() {
  static const std::vector<CatalogEntry> catalog = {
      {"bed", 3.0, false},     {"box", 0.8, true},
      {"chair", 1.0, false},   {"desk", 1.8, false},
      {"lamp", 0.45, true},    {"monitor", 0.6, true},
      {"plant", 0.7, true},    {"shelf", 1.6, false},
      {"table", 1.8, false},   {"wardrobe", 2.6, false},
  };
  return catalog;
}

const std::vector<std::string>& supporter_preference() {
  static const std::vector<std::string> order = {"desk", "table", "shelf",
                                                 "bed"};
  return order;
}

Scene generate_scene(const GenConfig& cfg) {
  if (cfg.min_nodes < 1 || cfg.max_nodes < cfg.min_nodes)
    fail(ErrorCode::GenerationFailure, "bad node_count_range");
  if (cfg.margin <= 0.0)
    fail(ErrorCode::GenerationFailure, "margin must be positive");

  Rng rng(derive_seed(cfg.seed, kStreamPlace));
  const int n = rng.int_range(cfg.min_nodes, cfg.max_nodes);

  // One object per grid cell; cells are 2·margin apart with jitter margin/4,
  // so distinct cells always differ by ≥ 1.5·margin on some axis.
  const int side = std::max(2, static_cast<int>(std::ceil(std::sqrt(2.0 * n))));
  if (n > side * side)
    fail(ErrorCode::GenerationFailure, "grid too small for node count");

  const double step = 2.0 * cfg.margin;
  const double jitter = cfg.margin / 4.0;

  std::vector<int> cells(static_cast<std::size_t>(side) * side);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
  rng.shuffle(cells);

  const auto& catalog = default_catalog();
  std::map<std::string, int> next_instance;
  std::vector<PlacedObject> objects;
  objects.reserve(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    const CatalogEntry* entry = nullptr;
    for (int attempt = 0; attempt < 32; ++attempt) {
      const auto& candidate = catalog[rng.below(catalog.size())];
      if (next_instance[candidate.cls] < cfg.max_instances) {
        entry = &candidate;
        break;
      }
    }
    if (entry == nullptr)
      fail(ErrorCode::GenerationFailure, "instance budget exhausted");

    PlacedObject obj;
    obj.node = NodeRef{entry->cls, next_instance[entry->cls]++};
    const int cell = cells[static_cast<std::size_t>(i)];
    obj.x = (cell % side) * step + rng.uniform(-jitter, jitter);
    obj.y = (cell / side) * step + rng.uniform(-jitter, jitter);
    obj.size = entry->size;
    objects.push_back(std::move(obj));
  }

  // Deterministic support rule: each supportable object stands on the first
  // supporter-preference class present, lowest placement index.
  for (auto& obj : objects) {
    const auto ci = catalog_index(obj.node.cls);
    if (!ci || !catalog[static_cast<std::size_t>(*ci)].supportable) continue;
    for (const auto& pref : supporter_preference()) {
      const PlacedObject* found = nullptr;
      for (const auto& other : objects) {
        if (other.node != obj.node && other.node.cls == pref) {
          found = &other;
          break;
        }
      }
      if (found != nullptr) {
        obj.support_of = found->node;
        break;
      }
    }
  }

  Scene scene{std::move(objects), SceneGraph()};
  GenConfig derive_cfg = cfg;
  derive_cfg.seed = derive_seed(cfg.seed, kStreamDerive);
  scene.graph = derive_relations(scene.objects, derive_cfg);
  return scene;
}

std::vector<Scene> generate_corpus(const GenConfig& cfg, int count) {
  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    GenConfig one = cfg;
    one.seed = derive_seed(cfg.seed, kStreamScene + static_cast<std::uint64_t>(i));
    scenes.push_back(generate_scene(one));
  }
  return scenes;
}

SceneGraph derive_relations(const std::vector<PlacedObject>& objs,
                            const GenConfig& cfg) {
  SceneGraph g;
  for (const auto& o : objs) g.add_node(o.node);

  struct Candidate {
    Edge edge;
    bool support;
    bool spatial;
  };
  std::vector<Candidate> candidates;
  const int n = static_cast<int>(objs.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& a = objs[static_cast<std::size_t>(i)];
      const auto& b = objs[static_cast<std::size_t>(j)];
      if (a.x - b.x >= cfg.margin)
        candidates.push_back({{a.node, b.node, "right"}, false, true});
      if (b.y - a.y >= cfg.margin)
        candidates.push_back({{a.node, b.node, "front"}, false, true});
      if (a.size >= kSizeRatio * b.size)
        candidates.push_back({{a.node, b.node, "bigger_than"}, false, false});
      if (b.size >= kSizeRatio * a.size)
        candidates.push_back({{a.node, b.node, "smaller_than"}, false, false});
      if (a.support_of && *a.support_of == b.node)
        candidates.push_back({{a.node, b.node, "standing_on"}, true, false});
    }
  }

  Rng rng(cfg.seed);
  std::vector<Candidate> kept;
  kept.reserve(candidates.size());
  for (auto& c : candidates) {
    if (c.support || rng.bernoulli(cfg.density)) kept.push_back(std::move(c));
  }

  if (cfg.max_edges > 0 && static_cast<int>(kept.size()) > cfg.max_edges) {
    // Drop a seeded random subset of non-support edges, preserving order.
    std::vector<int> non_support;
    for (std::size_t i = 0; i < kept.size(); ++i)
      if (!kept[i].support) non_support.push_back(static_cast<int>(i));
    int excess = static_cast<int>(kept.size()) - cfg.max_edges;
    excess = std::min<int>(excess, static_cast<int>(non_support.size()));
    rng.shuffle(non_support);
    std::vector<bool> drop(kept.size(), false);
    for (int i = 0; i < excess; ++i)
      drop[static_cast<std::size_t>(non_support[static_cast<std::size_t>(i)])] =
          true;
    std::vector<Candidate> trimmed;
    trimmed.reserve(static_cast<std::size_t>(cfg.max_edges));
    for (std::size_t i = 0; i < kept.size(); ++i)
      if (!drop[i]) trimmed.push_back(std::move(kept[i]));
    kept = std::move(trimmed);
  }

  const Schema& schema = g.schema();
  for (auto& c : kept) {
    Edge e = c.edge;
    if (c.spatial && rng.bernoulli(0.5))
      e = Edge{e.dst, e.src, *schema.inverse_of(e.rel)};
    g.add_edge(e);
  }
  return g;
}

SceneGraph load_triplets(std::istream& in, const Schema& schema,
                         int max_instances) {
  Schema active = schema;
  struct Row {
    int line_no;
    NodeRef subj, obj;
    std::string rel;
  };
  std::vector<Row> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string s, o, r, extra;
    if (!(ss >> s)) continue;  // blank line
    if (!(ss >> o >> r) || (ss >> extra))
      fail(ErrorCode::ParseError,
           "line " + std::to_string(line_no) + ": expected 3 fields");
    Row row;
    row.line_no = line_no;
    try {
      row.subj = parse_node(s);
      row.obj = parse_node(o);
    } catch (const Error& e) {
      fail(ErrorCode::ParseError,
           "line " + std::to_string(line_no) + ": " + e.what());
    }
    for (const auto* nref : {&row.subj, &row.obj}) {
      if (nref->instance >= max_instances)
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                        ": instance index " +
                                        std::to_string(nref->instance) +
                                        " >= max_instances");
      // Classes outside the base schema extend the active class set.
      if (!active.has_class(nref->cls)) active.classes.push_back(nref->cls);
    }
    if (!active.has_relation(r))
      fail(ErrorCode::ParseError,
           "line " + std::to_string(line_no) + ": unknown relation '" + r + "'");
    row.rel = r;
    rows.push_back(std::move(row));
  }

  SceneGraph g(active);
  for (const auto& row : rows) {
    if (!g.has_node(row.subj)) g.add_node(row.subj);
    if (!g.has_node(row.obj)) g.add_node(row.obj);
    try {
      g.add_edge(Edge{row.subj, row.obj, row.rel});
    } catch (const Error& e) {
      fail(ErrorCode::ParseError,
           "line " + std::to_string(row.line_no) + ": " + e.what());
    }
  }
  return g;
}

SceneGraph load_triplets_text(const std::string& text, const Schema& schema,
                              int max_instances) {
  std::istringstream in(text);
  return load_triplets(in, schema, max_instances);
}

void save_triplets(const SceneGraph& g, std::ostream& out) {
  for (const auto& e : g.edges())
    out << e.src.display() << ' ' << e.dst.display() << ' ' << e.rel << '\n';
}

std::string save_triplets_text(const SceneGraph& g) {
  std::ostringstream out;
  save_triplets(g, out);
  return out.str();
}

std::vector<SceneGraph> shuffle_augment(const SceneGraph& g, int copies,
                                        std::uint64_t seed) {
  std::vector<SceneGraph> out;
  out.reserve(static_cast<std::size_t>(std::max(copies, 0)));
  for (int c = 0; c < copies; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::vector<Edge> edges = g.edges();
    rng.shuffle(edges);
    SceneGraph copy(g.schema());
    for (const auto& n : g.nodes()) copy.add_node(n);
    for (const auto& e : edges) copy.add_edge(e);
    out.push_back(std::move(copy));
  }
  return out;
}

std::string to_dot(const SceneGraph& g) {
  std::ostringstream out;
  out << "digraph {\n";
  std::vector<bool> mentioned(g.nodes().size(), false);
  for (const auto& e : g.edges()) {
    mentioned[static_cast<std::size_t>(g.node_index(e.src))] = true;
    mentioned[static_cast<std::size_t>(g.node_index(e.dst))] = true;
  }
  for (std::size_t i = 0; i < g.nodes().size(); ++i)
    if (!mentioned[i]) out << "  \"" << g.nodes()[i].display() << "\";\n";
  for (const auto& e : g.edges())
    out << "  \"" << e.src.display() << "\" -> \"" << e.dst.display()
        << "\" [label=\"" << e.rel << "\"];\n";
  out << "}\n";
  return out.str();
}

void save_corpus_dir(const std::string& dir, const std::vector<Scene>& scenes,
                     const GenConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["count"] = scenes.size();
  manifest["seed"] = cfg.seed;
  manifest["min_nodes"] = cfg.min_nodes;
  manifest["max_nodes"] = cfg.max_nodes;
  manifest["margin"] = cfg.margin;
  manifest["density"] = cfg.density;
  manifest["max_edges"] = cfg.max_edges;
  manifest["max_instances"] = cfg.max_instances;
  manifest["schema"] = default_schema().id;
  std::vector<std::string> files;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05zu.txt", i);
    files.emplace_back(name);
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, std::string("cannot write ") + name);
    save_triplets(scenes[i].graph, out);
  }
  manifest["files"] = files;
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write manifest.json");
  out << manifest.dump(2) << '\n';
}

std::vector<SceneGraph> load_corpus_dir(const std::string& dir,
                                        const Schema& schema,
                                        int max_instances) {
  namespace fs = std::filesystem;
  std::ifstream min(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!min) fail(ErrorCode::IoError, "cannot read manifest.json in " + dir);
  nlohmann::json manifest;
  try {
    min >> manifest;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("manifest.json: ") + e.what());
  }
  std::vector<SceneGraph> graphs;
  for (const auto& name : manifest.at("files")) {
    std::ifstream in(fs::path(dir) / name.get<std::string>(),
                     std::ios::binary);
    if (!in)
      fail(ErrorCode::IoError, "cannot read " + name.get<std::string>());
    graphs.push_back(load_triplets(in, schema, max_instances));
  }
  return graphs;
}

}  // namespace sgt
