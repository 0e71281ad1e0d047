#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sgt/error.hpp"

namespace sgt {

struct NodeRef {
  std::string cls;
  int instance = 0;

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;

  // "chair_1"
  std::string display() const { return cls + "_" + std::to_string(instance); }
};

// Parses "<class>_<instance>" splitting at the last underscore.
NodeRef parse_node(const std::string& text);

struct Edge {
  NodeRef src;
  NodeRef dst;
  std::string rel;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Schema {
  std::string id = "default";
  std::vector<std::string> classes;
  std::vector<std::string> relations;
  // Involution: inverses.at(inverses.at(r)) == r for every entry.
  std::map<std::string, std::string> inverses;
  std::set<std::string> support_relations;
  std::set<std::string> size_relations;
  // Normalization rewrites a spatial edge onto the canonical member of its
  // inverse pair; these are the canonical members.
  std::vector<std::string> canonical_spatial;
  // Classes that may appear as the target of a support relation.
  std::vector<std::string> supporter_classes;

  bool has_class(const std::string& c) const;
  bool has_relation(const std::string& r) const;
  int relation_index(const std::string& r) const;  // -1 when absent
  std::optional<std::string> inverse_of(const std::string& r) const;
  bool is_spatial(const std::string& r) const;
  bool is_canonical_spatial(const std::string& r) const;

  // Throws SchemaMissingInverse / UnknownSymbol on an ill-formed schema.
  void validate() const;
};

// Seven relations over ten indoor object classes; the fixture schema used by
// the corpus generator and the CLI.
const Schema& default_schema();

class SceneGraph {
 public:
  SceneGraph() : SceneGraph(default_schema()) {}
  explicit SceneGraph(Schema schema);

  const Schema& schema() const { return schema_; }
  const std::vector<NodeRef>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_node(const NodeRef& ref) const;
  bool has_edge(const Edge& edge) const;
  // Index into nodes(); -1 when absent.
  int node_index(const NodeRef& ref) const;

  void add_node(const NodeRef& ref);
  void add_edge(const Edge& edge);
  void remove_node(const NodeRef& ref);
  void remove_edge(const Edge& edge);

  std::vector<Edge> edges_incident(const NodeRef& ref) const;
  // Removes every edge whose src or dst is ref; returns the removed edges in
  // stored order. Node itself stays.
  std::vector<Edge> cut_incident(const NodeRef& ref);

 private:
  Schema schema_;
  std::vector<NodeRef> nodes_;
  std::vector<Edge> edges_;
  std::map<NodeRef, int> index_;
};

// Rewrites non-canonical spatial edges ((a,b,left) -> (b,a,right), (a,b,behind)
// -> (b,a,front)) and drops duplicates that collapse together, preserving
// first-occurrence order. Idempotent. Size and support relations untouched.
SceneGraph normalize_spatial(const SceneGraph& graph);

}  // namespace sgt
