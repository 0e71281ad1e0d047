#include "sgt/scenegraph.hpp"

#include <algorithm>

namespace sgt {

NodeRef parse_node(const std::string& text) {
  const auto pos = text.rfind('_');
  if (pos == std::string::npos || pos == 0 || pos + 1 == text.size())
    fail(ErrorCode::ParseError, "bad node token '" + text + "'");
  const std::string cls = text.substr(0, pos);
  const std::string idx = text.substr(pos + 1);
  int value = 0;
  for (char c : idx) {
    if (c < '0' || c > '9')
      fail(ErrorCode::ParseError, "bad instance index in '" + text + "'");
    value = value * 10 + (c - '0');
    if (value > 1'000'000)
      fail(ErrorCode::ParseError, "instance index overflow in '" + text + "'");
  }
  return NodeRef{cls, value};
}

bool Schema::has_class(const std::string& c) const {
  return std::find(classes.begin(), classes.end(), c) != classes.end();
}

bool Schema::has_relation(const std::string& r) const {
  return std::find(relations.begin(), relations.end(), r) != relations.end();
}

int Schema::relation_index(const std::string& r) const {
  const auto it = std::find(relations.begin(), relations.end(), r);
  return it == relations.end() ? -1 : static_cast<int>(it - relations.begin());
}

std::optional<std::string> Schema::inverse_of(const std::string& r) const {
  const auto it = inverses.find(r);
  if (it == inverses.end()) return std::nullopt;
  return it->second;
}

bool Schema::is_spatial(const std::string& r) const {
  return inverses.count(r) > 0 && size_relations.count(r) == 0 &&
         support_relations.count(r) == 0;
}

bool Schema::is_canonical_spatial(const std::string& r) const {
  return std::find(canonical_spatial.begin(), canonical_spatial.end(), r) !=
         canonical_spatial.end();
}

void Schema::validate() const {
  for (const auto& [r, inv] : inverses) {
    if (!has_relation(r) || !has_relation(inv))
      fail(ErrorCode::UnknownSymbol, "inverse map names unknown relation '" +
                                         (has_relation(r) ? inv : r) + "'");
    const auto back = inverses.find(inv);
    if (back == inverses.end() || back->second != r)
      fail(ErrorCode::SchemaMissingInverse,
           "inverse of '" + r + "' -> '" + inv + "' is not an involution");
  }
  for (const auto& r : canonical_spatial) {
    if (!has_relation(r))
      fail(ErrorCode::UnknownSymbol, "canonical spatial relation '" + r +
                                         "' not in relation set");
    if (inverses.find(r) == inverses.end())
      fail(ErrorCode::SchemaMissingInverse,
           "canonical spatial relation '" + r + "' has no inverse");
  }
  for (const auto& c : supporter_classes) {
    if (!has_class(c))
      fail(ErrorCode::UnknownSymbol,
           "supporter class '" + c + "' not in class set");
  }
  for (const auto& r : support_relations) {
    if (!has_relation(r))
      fail(ErrorCode::UnknownSymbol, "support relation '" + r + "' unknown");
  }
  for (const auto& r : size_relations) {
    if (!has_relation(r))
      fail(ErrorCode::UnknownSymbol, "size relation '" + r + "' unknown");
  }
}

const Schema& default_schema() {
  static const Schema schema = [] {
    Schema s;
    s.id = "default";
    s.classes = {"bed",   "box",   "chair", "desk",  "lamp",
                 "monitor", "plant", "shelf", "table", "wardrobe"};
    s.relations = {"left",        "right",      "front",       "behind",
                   "standing_on", "bigger_than", "smaller_than"};
    s.inverses = {{"left", "right"},
                  {"right", "left"},
                  {"front", "behind"},
                  {"behind", "front"},
                  {"bigger_than", "smaller_than"},
                  {"smaller_than", "bigger_than"}};
    s.support_relations = {"standing_on"};
    s.size_relations = {"bigger_than", "smaller_than"};
    s.canonical_spatial = {"right", "front"};
    s.supporter_classes = {"desk", "table", "shelf", "bed"};
    s.validate();
    return s;
  }();
  return schema;
}

SceneGraph::SceneGraph(Schema schema) : schema_(std::move(schema)) {
  schema_.validate();
}

bool SceneGraph::has_node(const NodeRef& ref) const {
  return index_.count(ref) > 0;
}

bool SceneGraph::has_edge(const Edge& edge) const {
  return std::find(edges_.begin(), edges_.end(), edge) != edges_.end();
}

int SceneGraph::node_index(const NodeRef& ref) const {
  const auto it = index_.find(ref);
  return it == index_.end() ? -1 : it->second;
}

void SceneGraph::add_node(const NodeRef& ref) {
  if (!schema_.has_class(ref.cls))
    fail(ErrorCode::UnknownSymbol, "class '" + ref.cls + "' not in schema");
  if (ref.instance < 0)
    fail(ErrorCode::ParseError, "negative instance index for " + ref.display());
  if (has_node(ref))
    fail(ErrorCode::DuplicateNode, ref.display() + " already present");
  index_.emplace(ref, static_cast<int>(nodes_.size()));
  nodes_.push_back(ref);
}

void SceneGraph::add_edge(const Edge& edge) {
  if (!schema_.has_relation(edge.rel))
    fail(ErrorCode::UnknownSymbol, "relation '" + edge.rel + "' not in schema");
  if (!has_node(edge.src))
    fail(ErrorCode::UnknownNode, "src " + edge.src.display() + " not in graph");
  if (!has_node(edge.dst))
    fail(ErrorCode::UnknownNode, "dst " + edge.dst.display() + " not in graph");
  if (edge.src == edge.dst)
    fail(ErrorCode::SelfLoop, "self loop on " + edge.src.display());
  if (has_edge(edge))
    fail(ErrorCode::DuplicateEdge, edge.src.display() + " " +
                                       edge.dst.display() + " " + edge.rel);
  edges_.push_back(edge);
}

void SceneGraph::remove_node(const NodeRef& ref) {
  if (!has_node(ref))
    fail(ErrorCode::UnknownNode, ref.display() + " not in graph");
  cut_incident(ref);
  nodes_.erase(nodes_.begin() + index_.at(ref));
  index_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    index_.emplace(nodes_[i], static_cast<int>(i));
}

void SceneGraph::remove_edge(const Edge& edge) {
  const auto it = std::find(edges_.begin(), edges_.end(), edge);
  if (it == edges_.end())
    fail(ErrorCode::NoSuchEdge, edge.src.display() + " " + edge.dst.display() +
                                    " " + edge.rel);
  edges_.erase(it);
}

std::vector<Edge> SceneGraph::edges_incident(const NodeRef& ref) const {
  if (!has_node(ref))
    fail(ErrorCode::UnknownNode, ref.display() + " not in graph");
  std::vector<Edge> out;
  for (const auto& e : edges_)
    if (e.src == ref || e.dst == ref) out.push_back(e);
  return out;
}

std::vector<Edge> SceneGraph::cut_incident(const NodeRef& ref) {
  if (!has_node(ref))
    fail(ErrorCode::UnknownNode, ref.display() + " not in graph");
  std::vector<Edge> removed, kept;
  kept.reserve(edges_.size());
  for (auto& e : edges_) {
    if (e.src == ref || e.dst == ref)
      removed.push_back(std::move(e));
    else
      kept.push_back(std::move(e));
  }
  edges_ = std::move(kept);
  return removed;
}

SceneGraph normalize_spatial(const SceneGraph& graph) {
  const Schema& schema = graph.schema();
  SceneGraph out(schema);
  for (const auto& n : graph.nodes()) out.add_node(n);
  for (const auto& e : graph.edges()) {
    Edge canon = e;
    if (schema.is_spatial(e.rel) && !schema.is_canonical_spatial(e.rel))
      canon = Edge{e.dst, e.src, *schema.inverse_of(e.rel)};
    if (!out.has_edge(canon)) out.add_edge(canon);
  }
  return out;
}

}  // namespace sgt
