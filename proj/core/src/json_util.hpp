// Internal nlohmann adapters; not installed with the public headers.
#pragma once

#include <nlohmann/json.hpp>

#include "sgt/scenegraph.hpp"

namespace sgt {

inline nlohmann::json node_to_json(const NodeRef& n) {
  return nlohmann::json{n.cls, n.instance};
}

inline NodeRef node_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2)
    fail(ErrorCode::ParseError, "node must be [class, instance]");
  return NodeRef{j.at(0).get<std::string>(), j.at(1).get<int>()};
}

inline nlohmann::json edge_to_json(const Edge& e) {
  return nlohmann::json{{"src", node_to_json(e.src)},
                        {"dst", node_to_json(e.dst)},
                        {"rel", e.rel}};
}

inline Edge edge_from_json(const nlohmann::json& j) {
  return Edge{node_from_json(j.at("src")), node_from_json(j.at("dst")),
              j.at("rel").get<std::string>()};
}

inline nlohmann::json schema_to_json_obj(const Schema& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["classes"] = s.classes;
  j["relations"] = s.relations;
  j["inverses"] = s.inverses;
  j["support_relations"] = s.support_relations;
  j["size_relations"] = s.size_relations;
  j["canonical_spatial"] = s.canonical_spatial;
  j["supporter_classes"] = s.supporter_classes;
  return j;
}

inline Schema schema_from_json_obj(const nlohmann::json& j) {
  Schema s;
  s.id = j.at("id").get<std::string>();
  s.classes = j.at("classes").get<std::vector<std::string>>();
  s.relations = j.at("relations").get<std::vector<std::string>>();
  if (j.contains("inverses"))
    s.inverses = j.at("inverses").get<std::map<std::string, std::string>>();
  if (j.contains("support_relations"))
    s.support_relations =
        j.at("support_relations").get<std::set<std::string>>();
  if (j.contains("size_relations"))
    s.size_relations = j.at("size_relations").get<std::set<std::string>>();
  if (j.contains("canonical_spatial"))
    s.canonical_spatial =
        j.at("canonical_spatial").get<std::vector<std::string>>();
  if (j.contains("supporter_classes"))
    s.supporter_classes =
        j.at("supporter_classes").get<std::vector<std::string>>();
  s.validate();
  return s;
}

}  // namespace sgt
