#pragma once

// Static digital-twin content: the road network graph with its geometry and
// RSU placements, plus the ground-truth dynamic object registry. The network
// is immutable after load and safe to share; the registry has a single
// writer (the clock driver) and is handed to readers as snapshots.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinsim/geometry.hpp"

namespace twinsim {

class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NodeRole { plain, entrance, exit };

enum class ObjectClass { vehicle, pedestrian, cyclist };

inline const char* to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::vehicle: return "vehicle";
    case ObjectClass::pedestrian: return "pedestrian";
    case ObjectClass::cyclist: return "cyclist";
  }
  return "?";
}

inline const char* to_string(NodeRole r) {
  switch (r) {
    case NodeRole::plain: return "plain";
    case NodeRole::entrance: return "entrance";
    case NodeRole::exit: return "exit";
  }
  return "?";
}

struct RoadNode {
  std::string id;
  Vec2 position;
  NodeRole role = NodeRole::plain;
};

// Jam-density capacity proxy: how many design vehicles plus minimum gaps fit
// on the segment. Overridable per segment in the map file.
inline constexpr double kVehicleDesignLength = 4.5;  // m
inline constexpr double kMinGap = 2.0;               // m

inline int default_capacity(double length_m) {
  const int c = static_cast<int>(std::floor(length_m / (kVehicleDesignLength + kMinGap)));
  return std::max(1, c);
}

struct RoadSegment {
  std::string id;
  std::string from_node;
  std::string to_node;
  Polyline polyline;
  double length = 0.0;  // always polyline_length(polyline)
  int capacity = 1;
};

struct RsuSite {
  std::string id;
  Pose2 pose;
  double sensing_range = 0.0;
};

/// Directed road graph. `outgoing` holds segment ids sorted lexicographically
/// so every traversal order is deterministic.
struct RoadNetwork {
  std::map<std::string, RoadNode> nodes;
  std::map<std::string, RoadSegment> segments;
  std::map<std::string, std::vector<std::string>> outgoing;
  std::vector<RsuSite> rsus;  // sorted by id

  const RoadNode& node(const std::string& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw ValidationError("unknown node id: " + id);
    return it->second;
  }

  const RoadSegment& segment(const std::string& id) const {
    auto it = segments.find(id);
    if (it == segments.end()) throw ValidationError("unknown segment id: " + id);
    return it->second;
  }

  const RsuSite& rsu(const std::string& id) const {
    for (const auto& r : rsus) {
      if (r.id == id) return r;
    }
    throw ValidationError("unknown rsu id: " + id);
  }

  std::vector<std::string> nodes_with_role(NodeRole role) const {
    std::vector<std::string> out;
    for (const auto& [id, n] : nodes) {
      if (n.role == role) out.push_back(id);
    }
    return out;
  }
};

struct Dims {
  double length = 0.0;
  double width = 0.0;
};

inline Dims default_dims(ObjectClass c) {
  switch (c) {
    case ObjectClass::vehicle: return {4.5, 1.8};
    case ObjectClass::pedestrian: return {0.5, 0.5};
    case ObjectClass::cyclist: return {1.8, 0.6};
  }
  return {};
}

/// Ground-truth traffic participant. arc_position is measured along the
/// polyline of segment_id; pose is derived from it.
struct DynamicObject {
  std::string id;
  ObjectClass cls = ObjectClass::vehicle;
  Pose2 pose;
  double speed = 0.0;  // m/s, nominal setpoint
  Dims dims;
  std::string segment_id;
  double arc_position = 0.0;
};

/// Registry of live objects, kept sorted by id. Single writer; readers copy.
struct ObjectRegistry {
  std::vector<DynamicObject> objects;
  std::uint64_t spawned_total = 0;
  std::uint64_t despawned_total = 0;

  DynamicObject* find(const std::string& id) {
    auto it = std::lower_bound(objects.begin(), objects.end(), id,
                               [](const DynamicObject& o, const std::string& key) {
                                 return o.id < key;
                               });
    return (it != objects.end() && it->id == id) ? &*it : nullptr;
  }

  const DynamicObject* find(const std::string& id) const {
    return const_cast<ObjectRegistry*>(this)->find(id);
  }

  void insert(DynamicObject obj) {
    auto it = std::lower_bound(objects.begin(), objects.end(), obj.id,
                               [](const DynamicObject& o, const std::string& key) {
                                 return o.id < key;
                               });
    if (it != objects.end() && it->id == obj.id) {
      throw ValidationError("duplicate object id: " + obj.id);
    }
    objects.insert(it, std::move(obj));
    ++spawned_total;
  }

  void erase(const std::string& id) {
    auto it = std::lower_bound(objects.begin(), objects.end(), id,
                               [](const DynamicObject& o, const std::string& key) {
                                 return o.id < key;
                               });
    if (it != objects.end() && it->id == id) {
      objects.erase(it);
      ++despawned_total;
    }
  }

  std::size_t size() const { return objects.size(); }
};

inline void refresh_pose(DynamicObject& obj, const RoadNetwork& net) {
  const RoadSegment& seg = net.segment(obj.segment_id);
  obj.pose.position = point_at_arc(seg.polyline, obj.arc_position);
  obj.pose.heading = heading_at_arc(seg.polyline, obj.arc_position);
}

// ---------------------------------------------------------------------------
// Network validation
// ---------------------------------------------------------------------------

/// Checks every structural invariant of the network: referenced endpoints
/// exist, geometry is consistent, capacities are positive and every entrance
/// reaches every exit. Throws ValidationError with the first violation.
inline void validate_network(const RoadNetwork& net) {
  for (const auto& [id, seg] : net.segments) {
    if (seg.id != id) throw ValidationError("segment key/id mismatch: " + id);
    if (!net.nodes.count(seg.from_node)) {
      throw ValidationError("segment " + id + " references unknown from node " + seg.from_node);
    }
    if (!net.nodes.count(seg.to_node)) {
      throw ValidationError("segment " + id + " references unknown to node " + seg.to_node);
    }
    if (seg.from_node == seg.to_node) {
      throw ValidationError("segment " + id + " is a self-loop");
    }
    if (seg.polyline.size() < 2) {
      throw ValidationError("segment " + id + " needs a polyline of >= 2 points");
    }
    const double computed = polyline_length(seg.polyline);
    if (std::abs(computed - seg.length) > 1e-6) {
      throw ValidationError("segment " + id + " length differs from polyline length");
    }
    if (seg.length <= 0.0) {
      throw ValidationError("segment " + id + " has zero length");
    }
    if (seg.capacity < 1) {
      throw ValidationError("segment " + id + " capacity must be >= 1");
    }
  }
  for (const auto& r : net.rsus) {
    if (r.sensing_range <= 0.0) {
      throw ValidationError("rsu " + r.id + " sensing_range must be > 0");
    }
  }

  // Every entrance must reach every exit.
  const auto entrances = net.nodes_with_role(NodeRole::entrance);
  const auto exits = net.nodes_with_role(NodeRole::exit);
  for (const auto& src : entrances) {
    std::set<std::string> seen{src};
    std::vector<std::string> stack{src};
    while (!stack.empty()) {
      const std::string cur = stack.back();
      stack.pop_back();
      auto it = net.outgoing.find(cur);
      if (it == net.outgoing.end()) continue;
      for (const auto& sid : it->second) {
        const std::string& nxt = net.segment(sid).to_node;
        if (seen.insert(nxt).second) stack.push_back(nxt);
      }
    }
    for (const auto& dst : exits) {
      if (!seen.count(dst)) {
        throw ValidationError("exit node " + dst + " unreachable from entrance " + src);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// locate_on_segment
// ---------------------------------------------------------------------------

struct SegmentLocation {
  std::string segment_id;
  double arc = 0.0;
  double lateral_distance = 0.0;
};

/// Nearest-segment projection. Returns the segment whose polyline is closest
/// to `point` when the perpendicular distance is within `lateral_max`, with
/// the arc length of the foot. Equidistant segments resolve to the
/// lexicographically smallest id. Segments are iterated in id order, so the
/// first strict minimum encountered is also the lexicographic winner.
inline std::optional<SegmentLocation> locate_on_segment(const RoadNetwork& net,
                                                        const Vec2& point,
                                                        double lateral_max) {
  std::optional<SegmentLocation> best;
  for (const auto& [id, seg] : net.segments) {
    const Projection proj = project_point(seg.polyline, point);
    if (!best || proj.distance < best->lateral_distance) {
      best = SegmentLocation{id, proj.arc, proj.distance};
    }
  }
  if (!best || best->lateral_distance > lateral_max) return std::nullopt;
  return best;
}

}  // namespace twinsim
