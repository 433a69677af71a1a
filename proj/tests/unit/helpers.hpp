#pragma once

// Shared builders for unit tests.

#include <string>
#include <vector>

#include "twinsim/world.hpp"

namespace twinsim::test {

/// Straight chain W -> X -> Y -> Z along the x axis with the given segment
/// lengths (segments named s0, s1, ...). First node is the entrance, last the
/// exit.
inline RoadNetwork line_network(const std::vector<double>& lengths) {
  RoadNetwork net;
  double x = 0.0;
  for (std::size_t i = 0; i <= lengths.size(); ++i) {
    RoadNode node;
    node.id = "n" + std::to_string(i);
    node.position = {x, 0.0};
    node.role = i == 0              ? NodeRole::entrance
                : i == lengths.size() ? NodeRole::exit
                                      : NodeRole::plain;
    net.nodes[node.id] = node;
    if (i < lengths.size()) x += lengths[i];
  }
  x = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    RoadSegment seg;
    seg.id = "s" + std::to_string(i);
    seg.from_node = "n" + std::to_string(i);
    seg.to_node = "n" + std::to_string(i + 1);
    seg.polyline = {{x, 0.0}, {x + lengths[i], 0.0}};
    seg.length = lengths[i];
    seg.capacity = default_capacity(seg.length);
    net.segments[seg.id] = seg;
    net.outgoing[seg.from_node].push_back(seg.id);
    x += lengths[i];
  }
  validate_network(net);
  return net;
}

inline DynamicObject make_vehicle(const std::string& id, const RoadNetwork& net,
                                  const std::string& segment, double arc, double speed) {
  DynamicObject obj;
  obj.id = id;
  obj.cls = ObjectClass::vehicle;
  obj.speed = speed;
  obj.dims = default_dims(ObjectClass::vehicle);
  obj.segment_id = segment;
  obj.arc_position = arc;
  refresh_pose(obj, net);
  return obj;
}

}  // namespace twinsim::test
