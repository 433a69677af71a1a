#pragma once

// Occupancy-aware route planning plus the trigger-distance / latency-budget
// arithmetic that bounds the re-routing service.
//
// Route search is label-correcting over labels ordered by (cost, length,
// lexicographic segment sequence). Edge weights are strictly positive, so
// stored labels are always simple paths and the fixpoint is the unique
// optimum under that total order. Costs accumulate edge by edge in path
// order, which keeps them bit-comparable with a brute-force enumeration that
// sums the same way.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twinsim/cloud.hpp"
#include "twinsim/world.hpp"

namespace twinsim {

class NoRouteError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RoutePlan {
  std::string origin_node;
  std::string destination_node;
  std::vector<std::string> segments;
  double total_length = 0.0;
  double max_occupancy = 0.0;
  double cost = 0.0;
  double decided_at = 0.0;
};

struct PlannerConfig {
  double theta = 0.5;  // occupancy trigger threshold on the default route
  double beta = 2.0;   // congestion cost weight
};

/// Distance the re-routing decision must lead the entrance node by:
/// the safe following distance plus the CoG-to-front-edge length.
inline double trigger_distance(double v_ego, double t_headway, double l_r) {
  return v_ego * t_headway + l_r;
}

/// Deadline for the route to reach the vehicle: the time to cover S.
inline double latency_budget(double s, double v_ego) { return s / v_ego; }

namespace detail {

struct PathLabel {
  double cost = 0.0;
  double length = 0.0;
  std::vector<std::string> segments;

  bool better_than(const PathLabel& o) const {
    if (cost != o.cost) return cost < o.cost;
    if (length != o.length) return length < o.length;
    return segments < o.segments;
  }
};

/// Minimum-label N_O -> N_D path for the given edge weight function.
template <typename WeightFn>
std::optional<PathLabel> search(const RoadNetwork& net, const std::string& src,
                                const std::string& dst, WeightFn weight) {
  net.node(src);
  net.node(dst);
  std::map<std::string, PathLabel> best;
  best[src] = PathLabel{};
  if (src == dst) return best[src];

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [node, outgoing] : net.outgoing) {
      auto it = best.find(node);
      if (it == best.end()) continue;
      const PathLabel base = it->second;  // copy: relaxations may rehash
      for (const auto& seg_id : outgoing) {
        const RoadSegment& seg = net.segment(seg_id);
        PathLabel cand;
        cand.cost = base.cost + weight(seg);
        cand.length = base.length + seg.length;
        cand.segments = base.segments;
        cand.segments.push_back(seg_id);
        auto [slot, inserted] = best.try_emplace(seg.to_node, cand);
        if (inserted || cand.better_than(slot->second)) {
          slot->second = cand;
          changed = true;
        }
      }
    }
  }

  auto it = best.find(dst);
  if (it == best.end()) return std::nullopt;
  return it->second;
}

inline RoutePlan to_plan(const PathLabel& label, const RoadNetwork& net,
                         const OccupancySnapshot& occupancy, const std::string& src,
                         const std::string& dst, const PlannerConfig& cfg) {
  RoutePlan plan;
  plan.origin_node = src;
  plan.destination_node = dst;
  plan.segments = label.segments;
  plan.total_length = label.length;
  plan.cost = 0.0;
  for (const auto& seg_id : label.segments) {
    const RoadSegment& seg = net.segment(seg_id);
    const double occ = occupancy.occupancy_of(seg_id);
    plan.cost += seg.length * (1.0 + cfg.beta * occ);
    plan.max_occupancy = std::max(plan.max_occupancy, occ);
  }
  return plan;
}

}  // namespace detail

/// Shortest route by pure distance; this is the default route.
inline RoutePlan default_route(const RoadNetwork& net, const std::string& src,
                               const std::string& dst) {
  const auto label =
      detail::search(net, src, dst, [](const RoadSegment& seg) { return seg.length; });
  if (!label) throw NoRouteError("no route from " + src + " to " + dst);
  RoutePlan plan;
  plan.origin_node = src;
  plan.destination_node = dst;
  plan.segments = label->segments;
  plan.total_length = label->length;
  plan.cost = label->length;  // distance-only cost
  return plan;
}

/// Re-routing decision. The default route stands unless its worst segment
/// occupancy exceeds theta; then the minimum of
///   cost(path) = sum_e length_e * (1 + beta * occ_e)
/// wins, ties broken by shorter length, then lexicographic segment ids.
inline RoutePlan plan(const RoadNetwork& net, const OccupancySnapshot& occupancy,
                      const std::string& src, const std::string& dst,
                      const PlannerConfig& cfg) {
  const auto shortest =
      detail::search(net, src, dst, [](const RoadSegment& seg) { return seg.length; });
  if (!shortest) throw NoRouteError("no route from " + src + " to " + dst);

  double default_max_occ = 0.0;
  for (const auto& seg_id : shortest->segments) {
    default_max_occ = std::max(default_max_occ, occupancy.occupancy_of(seg_id));
  }
  if (default_max_occ <= cfg.theta) {
    return detail::to_plan(*shortest, net, occupancy, src, dst, cfg);
  }

  const auto weighted = detail::search(net, src, dst, [&](const RoadSegment& seg) {
    return seg.length * (1.0 + cfg.beta * occupancy.occupancy_of(seg.id));
  });
  return detail::to_plan(*weighted, net, occupancy, src, dst, cfg);
}

/// True when `segments` is a connected src -> dst path in the network.
inline bool route_is_connected(const RoadNetwork& net, const std::vector<std::string>& segments,
                               const std::string& src, const std::string& dst) {
  std::string at = src;
  for (const auto& seg_id : segments) {
    auto it = net.segments.find(seg_id);
    if (it == net.segments.end() || it->second.from_node != at) return false;
    at = it->second.to_node;
  }
  return at == dst;
}

}  // namespace twinsim
