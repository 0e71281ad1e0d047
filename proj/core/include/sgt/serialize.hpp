#pragma once

#include <string>

#include "sgt/consistency.hpp"
#include "sgt/scenegraph.hpp"

namespace sgt {

// {"id", "classes", "relations", "inverses", "support_relations",
//  "size_relations", "canonical_spatial", "supporter_classes"}
std::string schema_to_json(const Schema& schema, int indent = 2);
Schema schema_from_json(const std::string& text);

// {"schema": <id>, "nodes": [{"class", "instance"}],
//  "edges": [{"src": [cls, ind], "dst": [cls, ind], "rel"}]}
std::string graph_to_json(const SceneGraph& g, int indent = 2);
// `base` supplies the schema when the payload's schema id matches base.id;
// classes seen in the payload extend the class set, mirroring load_triplets.
SceneGraph graph_from_json(const std::string& text,
                           const Schema& base = default_schema());

std::string consistency_report_to_json(const ConsistencyReport& report,
                                       int indent = 2);

}  // namespace sgt
