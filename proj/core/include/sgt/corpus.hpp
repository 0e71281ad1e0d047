#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sgt/scenegraph.hpp"

namespace sgt {

struct PlacedObject {
  NodeRef node;
  double x = 0.0;     // +x = right of the viewer
  double y = 0.0;     // smaller y = in front
  double size = 1.0;  // > 0
  std::optional<NodeRef> support_of;
};

struct GenConfig {
  int min_nodes = 3;
  int max_nodes = 6;
  double margin = 1.0;   // minimum coordinate gap for a spatial relation
  std::uint64_t seed = 0;
  double density = 0.6;  // fraction of derivable non-support relations kept
  int shuffle_copies = 3;
  // Cap on emitted edges (support edges kept preferentially); 0 = unlimited.
  // Keeps desk-profile scenes inside the model context window.
  int max_edges = 0;
  int max_instances = 16;
};

struct Scene {
  std::vector<PlacedObject> objects;
  SceneGraph graph;
};

// Class-intrinsic sizes and support rules backing the geometric oracle.
struct CatalogEntry {
  std::string cls;
  double size;
  bool supportable;  // may receive a standing_on edge
};

const std::vector<CatalogEntry>& default_catalog();
// Supporter preference order used when assigning support_of.
const std::vector<std::string>& supporter_preference();

// Grid placement with jitter: any two objects differ by ≥ margin on at least
// one axis. Deterministic in cfg.seed.
Scene generate_scene(const GenConfig& cfg);

// count scenes with per-scene seeds derived from cfg.seed.
std::vector<Scene> generate_corpus(const GenConfig& cfg, int count);

// Geometric oracle. For each ordered pair (i, j):
//   (i, j, right)        iff x_i − x_j ≥ margin
//   (i, j, front)        iff y_j − y_i ≥ margin
//   (i, j, bigger_than)  iff size_i ≥ 1.5·size_j   (smaller_than symmetric)
//   (i, j, standing_on)  iff support_of(i) = j
// then non-support edges are kept with probability `density`, capped at
// cfg.max_edges, and each surviving right/front edge is rewritten to its
// left/behind phrasing with probability 1/2.
SceneGraph derive_relations(const std::vector<PlacedObject>& objs,
                            const GenConfig& cfg);

// One `<class>_<instance> <class>_<instance> <relation>` triplet per line.
// Classes outside the schema extend the loaded graph's class set; unknown
// relations and instance indices ≥ max_instances are ParseErrors.
SceneGraph load_triplets(std::istream& in, const Schema& schema = default_schema(),
                         int max_instances = 16);
SceneGraph load_triplets_text(const std::string& text,
                              const Schema& schema = default_schema(),
                              int max_instances = 16);
void save_triplets(const SceneGraph& g, std::ostream& out);
std::string save_triplets_text(const SceneGraph& g);

// `copies` graphs, each a seeded uniform permutation of g's edge list.
std::vector<SceneGraph> shuffle_augment(const SceneGraph& g, int copies,
                                        std::uint64_t seed);

std::string to_dot(const SceneGraph& g);

// Directory IO used by the CLI: scene_%05d.txt files plus manifest.json.
void save_corpus_dir(const std::string& dir, const std::vector<Scene>& scenes,
                     const GenConfig& cfg);
std::vector<SceneGraph> load_corpus_dir(const std::string& dir,
                                        const Schema& schema = default_schema(),
                                        int max_instances = 16);

}  // namespace sgt
