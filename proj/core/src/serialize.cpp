#include "sgt/serialize.hpp"

#include "json_util.hpp"

namespace sgt {
namespace {

nlohmann::json parse(const std::string& text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string schema_to_json(const Schema& schema, int indent) {
  return schema_to_json_obj(schema).dump(indent);
}

Schema schema_from_json(const std::string& text) {
  try {
    return schema_from_json_obj(parse(text, "schema"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("schema: ") + e.what());
  }
}

std::string graph_to_json(const SceneGraph& g, int indent) {
  nlohmann::json j;
  j["schema"] = g.schema().id;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes())
    nodes.push_back({{"class", n.cls}, {"instance", n.instance}});
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges()) edges.push_back(edge_to_json(e));
  return j.dump(indent);
}

SceneGraph graph_from_json(const std::string& text, const Schema& base) {
  const nlohmann::json j = parse(text, "graph");
  try {
    const std::string id = j.at("schema").get<std::string>();
    Schema active = base;
    if (id != base.id)
      fail(ErrorCode::ParseError,
           "graph schema '" + id + "' does not match loaded schema '" +
               base.id + "'");

    std::vector<NodeRef> nodes;
    for (const auto& n : j.at("nodes"))
      nodes.push_back(
          NodeRef{n.at("class").get<std::string>(), n.at("instance").get<int>()});
    std::vector<Edge> edges;
    if (j.contains("edges"))
      for (const auto& e : j.at("edges")) edges.push_back(edge_from_json(e));

    for (const auto& n : nodes)
      if (!active.has_class(n.cls)) active.classes.push_back(n.cls);

    SceneGraph g(active);
    for (const auto& n : nodes) g.add_node(n);
    for (const auto& e : edges) g.add_edge(e);
    return g;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("graph: ") + e.what());
  }
}

std::string consistency_report_to_json(const ConsistencyReport& report,
                                       int indent) {
  nlohmann::json j;
  j["consistent"] = report.consistent;
  j["families_checked"] = report.families_checked;
  auto& cycles = j["cycles"] = nlohmann::json::array();
  for (const auto& c : report.cycles) {
    nlohmann::json jc;
    jc["family"] = c.family;
    auto& walk = jc["walk"] = nlohmann::json::array();
    for (const auto& n : c.walk) walk.push_back(n.display());
    cycles.push_back(std::move(jc));
  }
  return j.dump(indent);
}

}  // namespace sgt
