#pragma once

// Ego client logic: the re-routing trigger, plan adoption with the latency
// budget check, and route following with the shared car-following clamp.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinsim/net.hpp"
#include "twinsim/planner.hpp"
#include "twinsim/traffic.hpp"
#include "twinsim/world.hpp"

namespace twinsim {

struct TriggerConfig {
  double t_headway = kDefaultHeadwaySeconds;
  double l_r = 0.7;  // CoG to front edge, meters
};

/// Both trigger conditions: the ego's front edge is within the trigger
/// distance S of the node, and no other vehicle remains between the ego and
/// the node. Never fires while a route for this leg is already active.
inline bool should_trigger(const EgoState& ego, const ObjectRegistry& reg,
                           const RoadNetwork& net, const std::string& origin_node,
                           const TriggerConfig& cfg) {
  if (ego.has_route()) return false;
  const auto dist = distance_to_node(ego, net, origin_node);
  if (!dist) return false;
  const double front_edge = *dist - cfg.l_r;
  const double s = trigger_distance(ego.v_ego, cfg.t_headway, cfg.l_r);
  if (front_edge > s) return false;
  return is_last_before_node(ego, reg, net, origin_node);
}

/// One-shot latch: a given approach node fires at most once per leg.
class TriggerLatch {
 public:
  bool try_fire(const std::string& node) { return fired_.insert(node).second; }
  void reset() { fired_.clear(); }

 private:
  std::set<std::string> fired_;
};

enum class PlanAdoption { adopted, kept_default, noop };

/// Applies a received plan. Late plans (budget exceeded) are not trusted:
/// the ego keeps the default route and the caller records the violation.
inline PlanAdoption apply_plan(EgoState& ego, const RoadNetwork& net, const RoutePlan& plan,
                               const LatencyReport& report) {
  if (plan.segments.empty()) {
    if (plan.origin_node != plan.destination_node) {
      throw std::invalid_argument("plan without segments must have origin == destination");
    }
    return PlanAdoption::noop;
  }
  if (!route_is_connected(net, plan.segments, plan.origin_node, plan.destination_node)) {
    throw std::invalid_argument("plan segments do not form a connected path");
  }
  if (!report.within_budget) {
    ego.active_route = default_route(net, plan.origin_node, plan.destination_node).segments;
    ego.next_route_index = 0;
    return PlanAdoption::kept_default;
  }
  ego.active_route = plan.segments;
  ego.next_route_index = 0;
  return PlanAdoption::adopted;
}

/// Advances the ego one tick along its current segment and active route,
/// clamped behind the nearest object ahead exactly like background traffic.
/// route_end with an exhausted route marks arrival (a terminal state).
inline MoveResult follow(EgoState& ego, const RoadNetwork& net, const ObjectRegistry& reg,
                         double dt, double t_headway) {
  if (ego.arrived) return MoveResult::route_end;

  DynamicObject& obj = ego.object;
  const double d_safety = safety_gap(obj, t_headway);
  double target = obj.arc_position + ego.v_ego * dt;
  const auto leader = nearest_ahead_arc(reg, obj.segment_id, obj.arc_position, obj.id);
  if (leader && target > *leader - d_safety) {
    target = std::max(obj.arc_position, *leader - d_safety);
  }

  auto peek_next = [&]() -> std::optional<std::string> {
    if (ego.next_route_index >= ego.active_route.size()) return std::nullopt;
    return ego.active_route[ego.next_route_index];
  };
  auto consume_next = [&]() { ++ego.next_route_index; };

  const MoveResult res = apply_advance(obj, net, target, d_safety, reg, peek_next, consume_next);
  if (res == MoveResult::route_end && ego.has_route() &&
      ego.next_route_index >= ego.active_route.size()) {
    ego.arrived = true;
  }
  return res;
}

}  // namespace twinsim
