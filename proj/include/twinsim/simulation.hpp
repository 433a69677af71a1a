#pragma once

// Scenario driver. Owns the event queue and wires the subsystems together:
// traffic ticks, RSU sensing, the cloud's synchronization windows, the ego's
// status reports and the three-phase re-routing service. Single-threaded by
// construction; every stochastic draw happens in event order on a named
// stream, so a run is a pure function of (scenario, seed).
//
// Re-routing service round:
//   t0 emission -> every RSU runs a detection cycle (edge compute)
//      -> detection batches cross the uplink backbone (upload)
//      -> cloud fuses, builds occupancy, plans (cloud compute)
//      -> response crosses the downlink backbone plus the radio hop (download)
//   Phase boundaries are maxima over the parallel per-RSU legs, so the four
//   phase durations telescope exactly to receipt minus emission.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "twinsim/cloud.hpp"
#include "twinsim/edge.hpp"
#include "twinsim/event_queue.hpp"
#include "twinsim/map_io.hpp"
#include "twinsim/net.hpp"
#include "twinsim/planner.hpp"
#include "twinsim/scenario.hpp"
#include "twinsim/stats.hpp"
#include "twinsim/trace.hpp"
#include "twinsim/traffic.hpp"
#include "twinsim/vehicle.hpp"
#include "twinsim/world.hpp"

namespace twinsim {

inline constexpr double kTrafficTick = 0.1;  // seconds
inline constexpr const char* kEgoId = "ego";
inline constexpr const char* kCloudId = "cloud";

class Simulation {
 public:
  /// Loads the map, validates the scenario and seeds every stream. With an
  /// empty `out_dir` no trace files are written (validation / in-memory use).
  Simulation(ScenarioConfig cfg, std::string out_dir = "")
      : cfg_(std::move(cfg)),
        net_(load_network_file(cfg_.map_path)),
        traffic_(&net_, cfg_.flows, cfg_.seed, cfg_.vehicle.trigger.t_headway),
        cloud_stream_(cfg_.seed, "cloud"),
        links_(&queue_, RngStream(cfg_.seed, "net")),
        synchronizer_(cfg_.cloud.window),
        tracks_(static_cast<std::size_t>(cfg_.cloud.k), cfg_.cloud.v_stationary,
                2.0 * cfg_.cloud.epsilon) {
    validate_scenario(cfg_, net_);
    origin_node_ = resolve_origin_node(cfg_, net_);
    destination_node_ = resolve_destination_node(cfg_, net_);
    default_route(net_, origin_node_, destination_node_);  // fail early when no path

    const double s = trigger_distance(cfg_.ego.v_ego, cfg_.vehicle.trigger.t_headway,
                                      cfg_.vehicle.trigger.l_r);
    budget_ = latency_budget(s, cfg_.ego.v_ego);

    for (const auto& rsu : net_.rsus) {
      rsu_streams_.emplace(rsu.id, RngStream(cfg_.seed, "rsu-" + rsu.id));
    }

    setup_ego();
    if (!out_dir.empty()) open_traces(out_dir);
    schedule_initial_events();
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Executes the event loop for the configured duration and returns the run
  /// summary. Trace files (when enabled) are complete afterwards.
  RunSummary run() {
    queue_.run_until(cfg_.duration);
    finalize();
    return summary_;
  }

  /// Emits a RouteRequest at time `at` exactly as the ego would. Exists so
  /// harnesses can exercise the service pipeline at a chosen rate.
  void inject_route_request(double at) {
    queue_.schedule_at(at, [this]() { fire_route_request(); });
  }

  const RoadNetwork& network() const { return net_; }
  const EgoState& ego() const { return ego_; }
  const ObjectRegistry& registry() const { return registry_; }
  const std::string& origin_node() const { return origin_node_; }
  const std::string& destination_node() const { return destination_node_; }
  double budget() const { return budget_; }
  const std::vector<LatencyRow>& latency_rows() const { return latency_rows_; }
  const std::vector<RouteRow>& route_rows() const { return route_rows_; }
  const std::vector<OccupancyRow>& occupancy_rows() const { return occupancy_rows_; }
  const RunSummary& summary() const { return summary_; }

 private:
  // -- setup ----------------------------------------------------------------

  void setup_ego() {
    DynamicObject obj;
    obj.id = kEgoId;
    obj.cls = ObjectClass::vehicle;
    obj.speed = cfg_.ego.v_ego;
    obj.dims = default_dims(ObjectClass::vehicle);
    obj.segment_id = cfg_.ego.start_segment;
    obj.arc_position = cfg_.ego.start_arc;
    refresh_pose(obj, net_);
    registry_.insert(obj);

    ego_.object = obj;
    ego_.v_ego = cfg_.ego.v_ego;
    ego_.origin = cfg_.ego.origin;
    ego_.destination = cfg_.ego.destination;
  }

  void open_traces(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path base(out_dir);
    latency_writer_.open((base / "latency.csv").string(), latency_csv_header());
    occupancy_writer_.open((base / "occupancy.csv").string(), occupancy_csv_header());
    routes_writer_.open((base / "routes.csv").string(), routes_csv_header());
  }

  void schedule_initial_events() {
    queue_.schedule_at(kTrafficTick, [this]() { traffic_tick(); });
    for (std::size_t i = 0; i < net_.rsus.size(); ++i) {
      queue_.schedule_at(cfg_.edge.sensor_period, [this, i]() { rsu_tick(i); });
    }
    queue_.schedule_at(cfg_.vehicle.status_period, [this]() { ego_status_tick(); });
    queue_.schedule_at(cfg_.cloud.window + cfg_.cloud.sync_delay,
                       [this]() { window_event(0); });
  }

  // -- periodic events --------------------------------------------------------

  void traffic_tick() {
    traffic_.step(registry_, kTrafficTick, {kEgoId});
    if (!ego_.arrived) {
      const MoveResult res =
          follow(ego_, net_, registry_, kTrafficTick, traffic_.t_headway());
      mirror_ego();
      if (res == MoveResult::route_end && !ego_.has_route()) {
        adopt_fallback_route();
      }
      maybe_trigger();
    }
    queue_.schedule_in(kTrafficTick, [this]() { traffic_tick(); });
  }

  void rsu_tick(std::size_t rsu_index) {
    const RsuSite& rsu = net_.rsus[rsu_index];
    const SensorFrame frame = sense(registry_, rsu, queue_.now());
    const DetectOutput out = detect(frame, cfg_.edge.for_rsu(rsu.id), rsu_streams_.at(rsu.id));
    queue_.schedule_in(out.compute_latency, [this, rsu_id = rsu.id, stamp = frame.stamp,
                                             dets = out.detections]() {
      Message msg;
      msg.kind = MessageKind::DetectionUpload;
      msg.payload = DetectionUploadPayload{rsu_id, stamp, dets};
      msg.src = rsu_id;
      msg.dst = kCloudId;
      links_.send(std::move(msg), cfg_.links.backbone_up, [this](const Message& m) {
        const auto& payload = std::get<DetectionUploadPayload>(m.payload);
        for (const auto& det : payload.detections) synchronizer_.push(det);
      });
    });
    queue_.schedule_in(cfg_.edge.sensor_period, [this, rsu_index]() { rsu_tick(rsu_index); });
  }

  void window_event(std::uint64_t index) {
    const double window_end = (static_cast<double>(index) + 1.0) * cfg_.cloud.window;
    const std::vector<Detection> batch = synchronizer_.collect(window_end);
    std::vector<GlobalDetection> globals;
    globals.reserve(batch.size());
    for (const auto& det : batch) globals.push_back(make_global(det, net_.rsu(det.rsu_id)));
    std::vector<FusedObject> fused = fuse(globals, cfg_.cloud.epsilon);
    tracks_.update(fused, window_end);
    exclude_ego_track(fused, ego_reports_, cfg_.cloud.epsilon);
    const OccupancySnapshot snap =
        build_occupancy(fused, net_, cfg_.cloud.lateral_max, window_end);
    for (const auto& [seg_id, occ] : snap.per_segment) {
      OccupancyRow row{snap.stamp, seg_id, occ.object_count, occ.occupancy};
      occupancy_rows_.push_back(row);
      if (occupancy_writer_.is_open()) occupancy_writer_.row(to_csv(row));
    }
    queue_.schedule_at(window_end + cfg_.cloud.window + cfg_.cloud.sync_delay,
                       [this, index]() { window_event(index + 1); });
  }

  void ego_status_tick() {
    Message msg;
    msg.kind = MessageKind::EgoStatus;
    msg.payload = EgoStatusPayload{ego_.object.pose.position, ego_.object.speed,
                                   ego_.object.pose.heading, queue_.now()};
    msg.src = kEgoId;
    msg.dst = kCloudId;
    // Radio hop at the ego's position; backbone forwarding folded in.
    const LinkClass cls = select_link(cfg_.links.policy, ego_.object.pose.position);
    links_.send(std::move(msg), cfg_.links.by_class(cls), [this](const Message& m) {
      const auto& payload = std::get<EgoStatusPayload>(m.payload);
      ego_reports_.push_back({payload.stamp, payload.position});
      while (!ego_reports_.empty() && ego_reports_.front().stamp < payload.stamp - 10.0) {
        ego_reports_.erase(ego_reports_.begin());
      }
    });
    queue_.schedule_in(cfg_.vehicle.status_period, [this]() { ego_status_tick(); });
  }

  // -- vehicle edge -----------------------------------------------------------

  void mirror_ego() {
    if (DynamicObject* slot = registry_.find(kEgoId)) *slot = ego_.object;
  }

  void maybe_trigger() {
    if (ego_.has_route() || ego_.arrived) return;
    if (!should_trigger(ego_, registry_, net_, origin_node_, cfg_.vehicle.trigger)) return;
    if (!latch_.try_fire(origin_node_)) return;
    fire_route_request();
  }

  void fire_route_request() {
    Message msg;
    msg.kind = MessageKind::RouteRequest;
    msg.payload = RouteRequestPayload{kEgoId, origin_node_, destination_node_, queue_.now()};
    msg.src = kEgoId;
    msg.dst = kCloudId;
    ++requests_sent_;
    links_.send_with_retry(std::move(msg), cfg_.links.request, cfg_.links.retx_timeout,
                           [this](const Message& m) { on_route_request(m); });
  }

  /// The plan never arrived before the entrance node: proceed on the default
  /// route so the vehicle keeps moving. The miss shows up as an unanswered
  /// request in the summary.
  void adopt_fallback_route() {
    ego_.active_route = default_route(net_, origin_node_, destination_node_).segments;
    ego_.next_route_index = 0;
  }

  // -- cloud: re-routing service ------------------------------------------------

  struct ServiceRound {
    std::uint64_t request_id = 0;
    RouteRequestPayload request;
    double t_request = 0.0;
    double edge_done = 0.0;
    double upload_done = 0.0;
    double decision_done = 0.0;
    std::size_t uploads_expected = 0;
    std::size_t uploads_arrived = 0;
    std::vector<GlobalDetection> detections;
  };

  void on_route_request(const Message& msg) {
    const auto& payload = std::get<RouteRequestPayload>(msg.payload);
    const std::uint64_t round_id = ++round_counter_;
    ServiceRound& round = rounds_[round_id];
    round.request_id = round_id;
    round.request = payload;
    round.t_request = payload.stamp;
    round.uploads_expected = net_.rsus.size();

    if (net_.rsus.empty()) {
      round.edge_done = round.upload_done = queue_.now();
      decide_round(round_id);
      return;
    }
    for (const auto& rsu : net_.rsus) {
      const SensorFrame frame = sense(registry_, rsu, queue_.now());
      const DetectOutput out =
          detect(frame, cfg_.edge.for_rsu(rsu.id), rsu_streams_.at(rsu.id));
      queue_.schedule_in(out.compute_latency, [this, round_id, rsu_id = rsu.id,
                                               stamp = frame.stamp, dets = out.detections]() {
        Message up;
        up.kind = MessageKind::DetectionUpload;
        up.payload = DetectionUploadPayload{rsu_id, stamp, dets};
        up.src = rsu_id;
        up.dst = kCloudId;
        const auto sent = links_.send(std::move(up), cfg_.links.backbone_up,
                                      [this, round_id](const Message& m) {
                                        on_round_upload(round_id, m);
                                      });
        if (sent == LinkLayer::SendResult::dropped) {
          auto it = rounds_.find(round_id);
          if (it == rounds_.end()) return;
          it->second.uploads_expected -= 1;  // never retransmitted
          it->second.edge_done = std::max(it->second.edge_done, queue_.now());
          if (it->second.uploads_arrived == it->second.uploads_expected) {
            it->second.upload_done = std::max(it->second.upload_done, queue_.now());
            schedule_decision(round_id);
          }
        }
      });
    }
  }

  void on_round_upload(std::uint64_t round_id, const Message& msg) {
    auto it = rounds_.find(round_id);
    if (it == rounds_.end()) return;
    ServiceRound& round = it->second;
    const auto& payload = std::get<DetectionUploadPayload>(msg.payload);
    for (const auto& det : payload.detections) {
      round.detections.push_back(make_global(det, net_.rsu(det.rsu_id)));
    }
    round.edge_done = std::max(round.edge_done, msg.t_sent);
    round.upload_done = std::max(round.upload_done, msg.t_delivered);
    round.uploads_arrived += 1;
    if (round.uploads_arrived == round.uploads_expected) schedule_decision(round_id);
  }

  void schedule_decision(std::uint64_t round_id) {
    const double compute = cfg_.cloud.compute_latency.sample(cloud_stream_);
    queue_.schedule_in(compute, [this, round_id]() { decide_round(round_id); });
  }

  void decide_round(std::uint64_t round_id) {
    auto it = rounds_.find(round_id);
    if (it == rounds_.end()) return;
    ServiceRound& round = it->second;
    round.decision_done = queue_.now();

    std::vector<FusedObject> fused = fuse(round.detections, cfg_.cloud.epsilon);
    exclude_ego_track(fused, ego_reports_, cfg_.cloud.epsilon);
    const OccupancySnapshot snap =
        build_occupancy(fused, net_, cfg_.cloud.lateral_max, round.decision_done);
    RoutePlan decision = plan(net_, snap, round.request.origin_node,
                              round.request.destination_node, cfg_.planner);
    decision.decided_at = round.decision_done;

    RouteRow row;
    row.decided_at = round.decision_done;
    row.request_id = round_id;
    row.origin_node = decision.origin_node;
    row.destination_node = decision.destination_node;
    row.used_default =
        decision.segments ==
        default_route(net_, decision.origin_node, decision.destination_node).segments;
    row.segments = decision.segments;
    row.total_length = decision.total_length;
    row.max_occupancy = decision.max_occupancy;
    row.cost = decision.cost;
    for (const auto& [seg_id, occ] : snap.per_segment) {
      row.occupancy_snapshot[seg_id] = occ.occupancy;
    }
    route_rows_.push_back(row);
    if (routes_writer_.is_open()) routes_writer_.row(to_csv(row));
    summary_.routes.push_back(
        {row.decided_at, row.request_id, row.used_default, row.segments});

    // Downlink: backbone leg, then the radio hop at the vehicle's position.
    Message down;
    down.kind = MessageKind::RouteResponse;
    down.payload =
        RouteResponsePayload{round_id, decision.segments, decision.cost, queue_.now()};
    down.src = kCloudId;
    down.dst = kEgoId;
    links_.send_with_retry(
        std::move(down), cfg_.links.backbone_down, cfg_.links.retx_timeout,
        [this, round_id](const Message& m) {
          const Vec2 at = ego_reports_.empty() ? ego_.object.pose.position
                                               : ego_reports_.back().position;
          const LinkClass cls = select_link(cfg_.links.policy, at);
          Message hop = m;
          links_.send_with_retry(std::move(hop), cfg_.links.by_class(cls),
                                 cfg_.links.retx_timeout,
                                 [this, round_id](const Message& final_msg) {
                                   on_route_response(round_id, final_msg);
                                 });
        });
  }

  // -- vehicle edge: response ---------------------------------------------------

  void on_route_response(std::uint64_t round_id, const Message& msg) {
    auto it = rounds_.find(round_id);
    if (it == rounds_.end()) return;
    ServiceRound& round = it->second;
    const auto& payload = std::get<RouteResponsePayload>(msg.payload);

    RequestTrace trace;
    trace.request_id = round_id;
    trace.t_request = round.t_request;
    trace.t_edge_done = round.edge_done;
    trace.t_upload_done = round.upload_done;
    trace.t_decision_done = round.decision_done;
    trace.t_received = msg.t_delivered;
    const LatencyReport report = account(trace, budget_);

    LatencyRow row{round_id, trace.t_request, report};
    latency_rows_.push_back(row);
    if (latency_writer_.is_open()) latency_writer_.row(to_csv(row));
    if (!report.within_budget) ++summary_.budget_violations;
    ++requests_answered_;

    if (!ego_.has_route() && !ego_.arrived) {
      RoutePlan received;
      received.origin_node = round.request.origin_node;
      received.destination_node = round.request.destination_node;
      received.segments = payload.segments;
      for (const auto& seg_id : payload.segments) {
        received.total_length += net_.segment(seg_id).length;
      }
      received.cost = payload.cost;
      received.decided_at = payload.stamp;
      apply_plan(ego_, net_, received, report);
    }
    rounds_.erase(it);
  }

  // -- finalization ---------------------------------------------------------

  void finalize() {
    if (!latency_rows_.empty()) {
      summary_.has_latency = true;
      summary_.latency = summarize_latency(latency_rows_);
    }
    summary_.dropped_messages = links_.total_dropped();
    summary_.late_detections = synchronizer_.late_dropped();
    summary_.retransmissions = links_.retransmissions();
    summary_.requests_unanswered = requests_sent_ - requests_answered_;
    latency_writer_.close();
    occupancy_writer_.close();
    routes_writer_.close();
  }

  ScenarioConfig cfg_;
  RoadNetwork net_;
  ObjectRegistry registry_;
  TrafficSim traffic_;
  EgoState ego_;
  TriggerLatch latch_;

  EventQueue queue_;
  RngStream cloud_stream_;
  std::map<std::string, RngStream> rsu_streams_;
  LinkLayer links_;
  Synchronizer synchronizer_;
  TrackSet tracks_;
  std::vector<TrackPoint> ego_reports_;  // recent status history, stamp order

  std::string origin_node_;
  std::string destination_node_;
  double budget_ = 0.0;

  std::uint64_t round_counter_ = 0;
  std::map<std::uint64_t, ServiceRound> rounds_;
  std::uint64_t requests_sent_ = 0;
  std::uint64_t requests_answered_ = 0;

  CsvWriter latency_writer_;
  CsvWriter occupancy_writer_;
  CsvWriter routes_writer_;
  std::vector<LatencyRow> latency_rows_;
  std::vector<OccupancyRow> occupancy_rows_;
  std::vector<RouteRow> route_rows_;
  RunSummary summary_;
};

}  // namespace twinsim
