#pragma once

// Ground-truth traffic on the logical clock: background flows plus the ego
// vehicle. Movement follows a fixed, documented order so that an independent
// per-object integrator over the same seed reproduces the evolution exactly:
//
//   1. Movement phase. Segments in ascending id order; objects on a segment
//      in descending pre-step arc order (ties by ascending id). Each object
//      advances arc by speed*dt. Vehicles are clamped so they stay at least
//      D_safety = speed * t_headway behind the nearest object ahead that is
//      still on the same segment after its own move; positions never move
//      backwards. Crossing the segment end transfers the remainder onto the
//      next route segment, where the landing is clamped against the rear-most
//      current occupant; an infeasible landing parks the object at the end of
//      its segment. Objects leaving their last route segment despawn.
//   2. Spawn phase. Per flow in declaration order, arrival times come from a
//      seeded exponential stream that never depends on traffic state. Due
//      arrivals enter at arc 0 of the flow's first segment as soon as the
//      entry gap is at least their D_safety, preserving arrival order.
//
// Pedestrians and cyclists move at constant speed with no car-following.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "twinsim/random.hpp"
#include "twinsim/world.hpp"

namespace twinsim {

inline constexpr double kDefaultHeadwaySeconds = 3.0;  // Japanese 3-second rule

struct FlowSpec {
  std::string entry_node;
  std::vector<std::string> route;  // ordered segment ids
  ObjectClass cls = ObjectClass::vehicle;
  double spawn_rate = 0.0;  // objects/second
  double speed = 0.0;       // m/s
};

/// Ego client state. `active_route` empty means no route adopted yet;
/// `next_route_index` is the next route segment the ego will enter.
struct EgoState {
  DynamicObject object;
  double v_ego = 0.0;
  Vec2 origin;
  Vec2 destination;
  std::vector<std::string> active_route;
  std::size_t next_route_index = 0;
  bool arrived = false;

  bool has_route() const { return !active_route.empty(); }
};

/// Only vehicles car-follow; pedestrians and cyclists keep constant speed and
/// pass anything (they contribute to occupancy, not to queueing).
inline bool car_follows(ObjectClass cls) { return cls == ObjectClass::vehicle; }

inline double safety_gap(const DynamicObject& obj, double t_headway) {
  return car_follows(obj.cls) ? obj.speed * t_headway : 0.0;
}

/// Smallest arc strictly ahead of `behind_arc` on `segment_id`, ignoring
/// `self_id`. This is the rear bumper the follower must respect.
inline std::optional<double> nearest_ahead_arc(const ObjectRegistry& reg,
                                               const std::string& segment_id,
                                               double behind_arc,
                                               const std::string& self_id) {
  std::optional<double> best;
  for (const auto& o : reg.objects) {
    if (o.id == self_id || o.segment_id != segment_id) continue;
    if (o.arc_position <= behind_arc) continue;
    if (!best || o.arc_position < *best) best = o.arc_position;
  }
  return best;
}

/// Rear-most occupant arc on a segment (for landing clamps and spawn gates).
inline std::optional<double> rearmost_arc(const ObjectRegistry& reg,
                                          const std::string& segment_id,
                                          const std::string& self_id) {
  std::optional<double> best;
  for (const auto& o : reg.objects) {
    if (o.id == self_id || o.segment_id != segment_id) continue;
    if (!best || o.arc_position < *best) best = o.arc_position;
  }
  return best;
}

enum class MoveResult { moved, route_end };

/// Applies an already-clamped target arc to `obj`, transferring across route
/// segments as needed. `peek_next` yields the segment after the current one
/// (nullopt at route end) and `consume_next` commits the transfer, so a
/// blocked landing does not eat a route segment. `live` is the registry state
/// used for landing clamps; non-following classes skip those clamps. On
/// route_end the object rests at the end of its final segment.
template <typename PeekFn, typename ConsumeFn>
MoveResult apply_advance(DynamicObject& obj, const RoadNetwork& net, double target_arc,
                         double d_safety, const ObjectRegistry& live, PeekFn peek_next,
                         ConsumeFn consume_next) {
  const RoadSegment* seg = &net.segment(obj.segment_id);
  while (target_arc >= seg->length) {
    const std::optional<std::string> next = peek_next();
    if (!next) {
      obj.arc_position = seg->length;
      refresh_pose(obj, net);
      return MoveResult::route_end;
    }
    const RoadSegment& nseg = net.segment(*next);
    double landing = target_arc - seg->length;
    if (car_follows(obj.cls)) {
      const std::optional<double> rear = rearmost_arc(live, nseg.id, obj.id);
      if (rear && landing > *rear - d_safety) {
        landing = *rear - d_safety;
        if (landing < 0.0) {
          // Entry blocked; park at the segment end and retry next step.
          obj.arc_position = seg->length;
          refresh_pose(obj, net);
          return MoveResult::moved;
        }
      }
    }
    consume_next();
    obj.segment_id = nseg.id;
    seg = &nseg;
    target_arc = landing;
  }
  obj.arc_position = target_arc;
  refresh_pose(obj, net);
  return MoveResult::moved;
}

/// Drives flows and background objects. The arrival stream of flow i is
/// RngStream(master_seed, "flow-<i>") consumed one exponential per arrival;
/// that labeling is part of the reproducibility contract.
class TrafficSim {
 public:
  TrafficSim(const RoadNetwork* net, std::vector<FlowSpec> flows, std::uint64_t master_seed,
             double t_headway = kDefaultHeadwaySeconds)
      : net_(net), flows_(std::move(flows)), t_headway_(t_headway) {
    validate_flows();
    for (std::size_t i = 0; i < flows_.size(); ++i) {
      FlowState st;
      st.stream = RngStream(master_seed, "flow-" + std::to_string(i));
      st.next_arrival = flows_[i].spawn_rate > 0.0
                            ? st.stream.exponential(flows_[i].spawn_rate)
                            : std::numeric_limits<double>::infinity();
      flow_states_.push_back(std::move(st));
    }
  }

  double now() const { return now_; }
  double t_headway() const { return t_headway_; }
  std::uint64_t blocked_spawns() const { return blocked_spawns_; }

  /// One simulation step of `dt` seconds; objects listed in `skip` are left
  /// untouched (the driver moves the ego through vehicle follow()).
  void step(ObjectRegistry& reg, double dt, const std::set<std::string>& skip = {}) {
    const double t_end = now_ + dt;
    move_phase(reg, dt, skip);
    spawn_phase(reg, t_end);
    now_ = t_end;
  }

 private:
  struct FlowState {
    RngStream stream;
    double next_arrival = 0.0;
    std::vector<double> pending;  // due arrival times, FIFO
    std::uint64_t spawn_counter = 0;
  };

  struct RouteProgress {
    std::size_t flow_index = 0;
    std::size_t next_index = 1;  // next route segment to enter
  };

  void validate_flows() const {
    for (const auto& f : flows_) {
      if (f.spawn_rate < 0.0) throw ValidationError("flow spawn_rate must be >= 0");
      if (f.speed < 0.0) throw ValidationError("flow speed must be >= 0");
      if (f.route.empty()) throw ValidationError("flow route must not be empty");
      const RoadSegment& first = net_->segment(f.route.front());
      if (first.from_node != f.entry_node) {
        throw ValidationError("flow route must start at its entry node");
      }
      for (std::size_t i = 1; i < f.route.size(); ++i) {
        if (net_->segment(f.route[i]).from_node != net_->segment(f.route[i - 1]).to_node) {
          throw ValidationError("flow route segments must form a connected path");
        }
      }
    }
  }

  void move_phase(ObjectRegistry& reg, double dt, const std::set<std::string>& skip) {
    // Pre-step ordering: (segment id asc, arc desc, id asc).
    struct Entry {
      std::string segment;
      double arc;
      std::string id;
    };
    std::vector<Entry> order;
    order.reserve(reg.objects.size());
    for (const auto& o : reg.objects) {
      if (skip.count(o.id)) continue;
      order.push_back({o.segment_id, o.arc_position, o.id});
    }
    std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
      if (a.segment != b.segment) return a.segment < b.segment;
      if (a.arc != b.arc) return a.arc > b.arc;
      return a.id < b.id;
    });

    std::string current_segment;
    bool have_stayer = false;   // nearest ahead object still on this segment
    double stayer_arc = 0.0;

    for (const auto& e : order) {
      if (e.segment != current_segment) {
        current_segment = e.segment;
        have_stayer = false;
      }
      DynamicObject* obj = reg.find(e.id);
      if (!obj || obj->segment_id != e.segment) continue;

      const double d_safety = safety_gap(*obj, t_headway_);
      double target = obj->arc_position + obj->speed * dt;
      if (car_follows(obj->cls) && have_stayer) {
        const double limit = stayer_arc - d_safety;
        if (target > limit) target = std::max(obj->arc_position, limit);
      }

      auto prog_it = routes_.find(obj->id);
      auto peek_next = [&]() -> std::optional<std::string> {
        if (prog_it == routes_.end()) return std::nullopt;
        const FlowSpec& flow = flows_[prog_it->second.flow_index];
        if (prog_it->second.next_index >= flow.route.size()) return std::nullopt;
        return flow.route[prog_it->second.next_index];
      };
      auto consume_next = [&]() {
        if (prog_it != routes_.end()) ++prog_it->second.next_index;
      };

      const MoveResult res =
          apply_advance(*obj, *net_, target, d_safety, reg, peek_next, consume_next);
      if (res == MoveResult::route_end && prog_it != routes_.end()) {
        // Left the world at route end; erase now so nothing clamps on it.
        const std::string id = obj->id;
        reg.erase(id);
        routes_.erase(id);
      } else if (obj->segment_id == e.segment) {
        have_stayer = true;
        stayer_arc = obj->arc_position;
      }
    }
  }

  void spawn_phase(ObjectRegistry& reg, double t_end) {
    for (std::size_t i = 0; i < flow_states_.size(); ++i) {
      const FlowSpec& flow = flows_[i];
      FlowState& st = flow_states_[i];
      while (st.next_arrival <= t_end) {
        st.pending.push_back(st.next_arrival);
        st.next_arrival += st.stream.exponential(flow.spawn_rate);
      }
      while (!st.pending.empty()) {
        DynamicObject obj;
        obj.cls = flow.cls;
        obj.speed = flow.speed;
        obj.dims = default_dims(flow.cls);
        obj.segment_id = flow.route.front();
        obj.arc_position = 0.0;

        const std::optional<double> rear = rearmost_arc(reg, obj.segment_id, obj.id);
        if (rear && *rear < safety_gap(obj, t_headway_)) {
          ++blocked_spawns_;
          break;  // entry blocked; retry next step, order preserved
        }

        char buf[32];
        std::snprintf(buf, sizeof(buf), "f%zu-%05llu", i,
                      static_cast<unsigned long long>(st.spawn_counter++));
        obj.id = buf;
        refresh_pose(obj, *net_);
        reg.insert(obj);
        routes_[obj.id] = RouteProgress{i, 1};
        st.pending.erase(st.pending.begin());
      }
    }
  }

  const RoadNetwork* net_;
  std::vector<FlowSpec> flows_;
  double t_headway_;
  double now_ = 0.0;
  std::vector<FlowState> flow_states_;
  std::map<std::string, RouteProgress> routes_;
  std::uint64_t blocked_spawns_ = 0;
};

// ---------------------------------------------------------------------------
// Ego route queries
// ---------------------------------------------------------------------------

/// Along-route arc distance from the ego's CoG to `node`, following the
/// current segment and then the active route. nullopt when the node is not on
/// the ego's forward path.
inline std::optional<double> distance_to_node(const EgoState& ego, const RoadNetwork& net,
                                              const std::string& node) {
  const RoadSegment& seg = net.segment(ego.object.segment_id);
  double acc = seg.length - ego.object.arc_position;
  std::string reached = seg.to_node;
  if (reached == node) return acc;
  for (std::size_t i = ego.next_route_index; i < ego.active_route.size(); ++i) {
    const RoadSegment& s = net.segment(ego.active_route[i]);
    if (s.from_node != reached) break;
    acc += s.length;
    reached = s.to_node;
    if (reached == node) return acc;
  }
  return std::nullopt;
}

/// True iff no other ground-truth vehicle lies strictly between the ego and
/// the node on the ego's inbound segment. Non-vehicles never block.
inline bool is_last_before_node(const EgoState& ego, const ObjectRegistry& reg,
                                const RoadNetwork& net, const std::string& node) {
  const RoadSegment& seg = net.segment(ego.object.segment_id);
  if (seg.to_node != node) return false;
  for (const auto& o : reg.objects) {
    if (o.id == ego.object.id || o.cls != ObjectClass::vehicle) continue;
    if (o.segment_id != seg.id) continue;
    if (o.arc_position > ego.object.arc_position && o.arc_position < seg.length) {
      return false;
    }
  }
  return true;
}

}  // namespace twinsim
