#pragma once

// Map document I/O. The document is JSON with fixed top-level keys `nodes`,
// `segments` and `rsus`; unknown keys are rejected anywhere in the document
// so typos fail loudly instead of silently applying defaults.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinsim/world.hpp"

namespace twinsim {

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError("unknown key '" + key + "' in " + where);
    }
  }
}

inline const json& require_key(const json& obj, const std::string& key,
                               const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing key '" + key + "' in " + where);
  return *it;
}

inline double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + " must be a number");
  return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + " must be a string");
  return v.get<std::string>();
}

inline NodeRole parse_role(const std::string& s, const std::string& where) {
  if (s == "plain") return NodeRole::plain;
  if (s == "entrance") return NodeRole::entrance;
  if (s == "exit") return NodeRole::exit;
  throw ParseError("bad role '" + s + "' in " + where);
}

inline ObjectClass parse_object_class(const std::string& s, const std::string& where) {
  if (s == "vehicle") return ObjectClass::vehicle;
  if (s == "pedestrian") return ObjectClass::pedestrian;
  if (s == "cyclist") return ObjectClass::cyclist;
  throw ParseError("bad object class '" + s + "' in " + where);
}

}  // namespace detail

/// Parses and validates a map document. Throws ParseError on malformed input
/// and ValidationError on structural violations.
inline RoadNetwork load_network(const std::string& document) {
  using detail::as_number;
  using detail::as_string;
  using detail::reject_unknown_keys;
  using detail::require_key;
  using json = nlohmann::json;

  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw ParseError(std::string("map document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("map document must be a JSON object");
  reject_unknown_keys(doc, {"nodes", "segments", "rsus"}, "map document");

  RoadNetwork net;

  const auto& jnodes = require_key(doc, "nodes", "map document");
  const auto& jsegments = require_key(doc, "segments", "map document");
  const auto& jrsus = require_key(doc, "rsus", "map document");
  if (!jnodes.is_array() || !jsegments.is_array() || !jrsus.is_array()) {
    throw ParseError("map keys nodes/segments/rsus must be arrays");
  }

  for (const auto& jn : jnodes) {
    reject_unknown_keys(jn, {"id", "x", "y", "role"}, "node record");
    RoadNode node;
    node.id = as_string(require_key(jn, "id", "node record"), "node id");
    node.position.x = as_number(require_key(jn, "x", "node " + node.id), "node x");
    node.position.y = as_number(require_key(jn, "y", "node " + node.id), "node y");
    node.role = detail::parse_role(
        as_string(require_key(jn, "role", "node " + node.id), "node role"), "node " + node.id);
    if (!net.nodes.emplace(node.id, node).second) {
      throw ValidationError("duplicate node id: " + node.id);
    }
  }

  for (const auto& js : jsegments) {
    reject_unknown_keys(js, {"id", "from", "to", "polyline", "capacity"}, "segment record");
    RoadSegment seg;
    seg.id = as_string(require_key(js, "id", "segment record"), "segment id");
    seg.from_node = as_string(require_key(js, "from", "segment " + seg.id), "segment from");
    seg.to_node = as_string(require_key(js, "to", "segment " + seg.id), "segment to");
    const auto& poly = require_key(js, "polyline", "segment " + seg.id);
    if (!poly.is_array()) throw ParseError("segment " + seg.id + " polyline must be an array");
    for (const auto& jp : poly) {
      if (!jp.is_array() || jp.size() != 2) {
        throw ParseError("segment " + seg.id + " polyline points must be [x, y]");
      }
      seg.polyline.push_back({as_number(jp[0], "polyline x"), as_number(jp[1], "polyline y")});
    }
    seg.length = polyline_length(seg.polyline);
    if (js.contains("capacity")) {
      const double cap = as_number(js["capacity"], "segment " + seg.id + " capacity");
      seg.capacity = static_cast<int>(cap);
      if (seg.capacity != cap) {
        throw ParseError("segment " + seg.id + " capacity must be an integer");
      }
    } else {
      seg.capacity = default_capacity(seg.length);
    }
    if (!net.segments.emplace(seg.id, seg).second) {
      throw ValidationError("duplicate segment id: " + seg.id);
    }
  }

  for (const auto& jr : jrsus) {
    reject_unknown_keys(jr, {"id", "x", "y", "heading", "range"}, "rsu record");
    RsuSite rsu;
    rsu.id = as_string(require_key(jr, "id", "rsu record"), "rsu id");
    rsu.pose.position.x = as_number(require_key(jr, "x", "rsu " + rsu.id), "rsu x");
    rsu.pose.position.y = as_number(require_key(jr, "y", "rsu " + rsu.id), "rsu y");
    rsu.pose.heading = as_number(require_key(jr, "heading", "rsu " + rsu.id), "rsu heading");
    rsu.sensing_range = as_number(require_key(jr, "range", "rsu " + rsu.id), "rsu range");
    for (const auto& existing : net.rsus) {
      if (existing.id == rsu.id) throw ValidationError("duplicate rsu id: " + rsu.id);
    }
    net.rsus.push_back(rsu);
  }
  std::sort(net.rsus.begin(), net.rsus.end(),
            [](const RsuSite& a, const RsuSite& b) { return a.id < b.id; });

  for (const auto& [id, seg] : net.segments) {
    net.outgoing[seg.from_node].push_back(id);  // map order keeps these sorted
  }

  validate_network(net);
  return net;
}

inline RoadNetwork load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open map file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_network(buf.str());
}

/// Serializes back to the map document format. load_network(serialize_network(n))
/// reproduces the data model exactly.
inline std::string serialize_network(const RoadNetwork& net) {
  using json = nlohmann::json;
  json doc;
  doc["nodes"] = json::array();
  for (const auto& [id, n] : net.nodes) {
    doc["nodes"].push_back({{"id", n.id},
                            {"x", n.position.x},
                            {"y", n.position.y},
                            {"role", to_string(n.role)}});
  }
  doc["segments"] = json::array();
  for (const auto& [id, s] : net.segments) {
    json poly = json::array();
    for (const auto& p : s.polyline) poly.push_back({p.x, p.y});
    doc["segments"].push_back({{"id", s.id},
                               {"from", s.from_node},
                               {"to", s.to_node},
                               {"polyline", poly},
                               {"capacity", s.capacity}});
  }
  doc["rsus"] = json::array();
  for (const auto& r : net.rsus) {
    doc["rsus"].push_back({{"id", r.id},
                           {"x", r.pose.position.x},
                           {"y", r.pose.position.y},
                           {"heading", r.pose.heading},
                           {"range", r.sensing_range}});
  }
  return doc.dump(2);
}

}  // namespace twinsim
