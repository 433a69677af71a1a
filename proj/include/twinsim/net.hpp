#pragma once

// Simulated heterogeneous V2X fabric: typed message envelopes, per-link
// latency/drop models, coverage-based link selection and per-phase latency
// accounting. Delivery runs on the shared EventQueue; a link applies one
// sampled latency per transmission and FIFO order is preserved among
// equal-latency sends by the scheduler's sequence numbers.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "twinsim/edge.hpp"
#include "twinsim/event_queue.hpp"
#include "twinsim/geometry.hpp"
#include "twinsim/random.hpp"
#include "twinsim/world.hpp"

namespace twinsim {

enum class MessageKind { DetectionUpload, EgoStatus, RouteRequest, RouteResponse };

inline const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::DetectionUpload: return "DetectionUpload";
    case MessageKind::EgoStatus: return "EgoStatus";
    case MessageKind::RouteRequest: return "RouteRequest";
    case MessageKind::RouteResponse: return "RouteResponse";
  }
  return "?";
}

// Wire payload records.
struct DetectionUploadPayload {
  std::string rsu_id;
  double stamp = 0.0;
  std::vector<Detection> detections;
};

struct EgoStatusPayload {
  Vec2 position;
  double speed = 0.0;
  double heading = 0.0;
  double stamp = 0.0;
};

struct RouteRequestPayload {
  std::string ego_id;
  std::string origin_node;       // N_O
  std::string destination_node;  // N_D
  double stamp = 0.0;
};

struct RouteResponsePayload {
  std::uint64_t request_id = 0;
  std::vector<std::string> segments;
  double cost = 0.0;
  double stamp = 0.0;
};

using Payload = std::variant<DetectionUploadPayload, EgoStatusPayload, RouteRequestPayload,
                             RouteResponsePayload>;

struct Message {
  std::uint64_t id = 0;
  MessageKind kind = MessageKind::DetectionUpload;
  Payload payload;
  std::string src;
  std::string dst;
  double t_sent = 0.0;
  double t_delivered = 0.0;
};

// ---------------------------------------------------------------------------
// Links
// ---------------------------------------------------------------------------

// `wired` covers the RSU<->cloud backbone and the request control channel;
// the three radio classes follow the coverage policy.
enum class LinkClass { cellular, dsrc, mmwave, wired };

inline const char* to_string(LinkClass c) {
  switch (c) {
    case LinkClass::cellular: return "cellular";
    case LinkClass::dsrc: return "dsrc";
    case LinkClass::mmwave: return "mmwave";
    case LinkClass::wired: return "wired";
  }
  return "?";
}

struct LinkModel {
  LinkClass link_class = LinkClass::wired;
  TriangularDist latency;  // seconds
  double p_drop = 0.0;
};

struct CoverageZone {
  Vec2 center;
  double radius = 0.0;
};

/// Radio coverage map. Every position maps to exactly one class:
/// mmWave zones take precedence, then DSRC zones, then cellular everywhere.
struct LinkSelectionPolicy {
  std::vector<CoverageZone> mmwave_zones;
  std::vector<CoverageZone> dsrc_zones;
};

inline bool in_any_zone(const std::vector<CoverageZone>& zones, const Vec2& p) {
  for (const auto& z : zones) {
    if (distance(z.center, p) <= z.radius) return true;
  }
  return false;
}

inline LinkClass select_link(const LinkSelectionPolicy& policy, const Vec2& position) {
  if (in_any_zone(policy.mmwave_zones, position)) return LinkClass::mmwave;
  if (in_any_zone(policy.dsrc_zones, position)) return LinkClass::dsrc;
  return LinkClass::cellular;
}

// ---------------------------------------------------------------------------
// Latency accounting
// ---------------------------------------------------------------------------

/// Phase boundary timestamps of one re-routing request on the shared clock.
struct RequestTrace {
  std::uint64_t request_id = 0;
  double t_request = 0.0;        // request emission (ego clock)
  double t_edge_done = 0.0;      // last RSU finished detecting
  double t_upload_done = 0.0;    // last detection batch reached the cloud
  double t_decision_done = 0.0;  // cloud finished fuse + plan
  double t_received = 0.0;       // response reached the ego
};

struct LatencyReport {
  std::uint64_t request_id = 0;
  double edge_compute = 0.0;
  double upload = 0.0;
  double cloud_compute = 0.0;
  double download = 0.0;
  double total = 0.0;  // always the sum of the four phases
  double budget = 0.0;
  bool within_budget = false;
};

/// Turns a complete trace into the per-phase breakdown. Phase durations are
/// differences of consecutive boundary stamps, so their sum telescopes to
/// receipt minus emission exactly; no time is hidden.
inline LatencyReport account(const RequestTrace& trace, double budget) {
  const bool ordered = trace.t_request <= trace.t_edge_done &&
                       trace.t_edge_done <= trace.t_upload_done &&
                       trace.t_upload_done <= trace.t_decision_done &&
                       trace.t_decision_done <= trace.t_received;
  if (!ordered) {
    throw ValidationError("request trace is incomplete or out of order");
  }
  LatencyReport r;
  r.request_id = trace.request_id;
  r.edge_compute = trace.t_edge_done - trace.t_request;
  r.upload = trace.t_upload_done - trace.t_edge_done;
  r.cloud_compute = trace.t_decision_done - trace.t_upload_done;
  r.download = trace.t_received - trace.t_decision_done;
  r.total = r.edge_compute + r.upload + r.cloud_compute + r.download;
  r.budget = budget;
  r.within_budget = r.total <= budget;
  return r;
}

// ---------------------------------------------------------------------------
// Link layer
// ---------------------------------------------------------------------------

struct LinkCounters {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
};

/// Schedules message deliveries on the event queue. One uniform draw decides
/// the drop, one triangular sample sets the latency; both are drawn on every
/// transmission so retries resample. Draw order follows event order, which is
/// deterministic.
class LinkLayer {
 public:
  LinkLayer(EventQueue* queue, RngStream stream) : queue_(queue), stream_(std::move(stream)) {}

  using DeliveryFn = std::function<void(const Message&)>;

  enum class SendResult { scheduled, dropped };

  SendResult send(Message msg, const LinkModel& link, DeliveryFn on_delivery) {
    auto& counters = counters_[link.link_class];
    ++counters.sent;
    msg.id = next_message_id_++;
    msg.t_sent = queue_->now();
    const double u_drop = stream_.uniform();
    const double latency = link.latency.sample(stream_);
    if (u_drop < link.p_drop) {
      ++counters.dropped;
      return SendResult::dropped;
    }
    msg.t_delivered = msg.t_sent + latency;
    queue_->schedule_at(msg.t_delivered, [this, &counters, msg = std::move(msg),
                                          on_delivery = std::move(on_delivery)]() {
      ++counters.delivered;
      on_delivery(msg);
    });
    return SendResult::scheduled;
  }

  /// Route request/response semantics: one retransmission after `timeout`
  /// when the first copy drops. Detection uploads never use this; a newer
  /// window supersedes them.
  void send_with_retry(Message msg, const LinkModel& link, double timeout,
                       DeliveryFn on_delivery) {
    if (send(msg, link, on_delivery) == SendResult::dropped) {
      ++retransmissions_;
      queue_->schedule_in(timeout, [this, msg = std::move(msg), link,
                                    on_delivery = std::move(on_delivery)]() mutable {
        if (send(std::move(msg), link, std::move(on_delivery)) == SendResult::dropped) {
          ++lost_after_retry_;
        }
      });
    }
  }

  const LinkCounters& counters(LinkClass c) const {
    static const LinkCounters kZero{};
    auto it = counters_.find(c);
    return it == counters_.end() ? kZero : it->second;
  }

  std::uint64_t total_dropped() const {
    std::uint64_t n = 0;
    for (const auto& [cls, c] : counters_) n += c.dropped;
    return n;
  }

  std::uint64_t retransmissions() const { return retransmissions_; }
  std::uint64_t lost_after_retry() const { return lost_after_retry_; }

 private:
  EventQueue* queue_;
  RngStream stream_;
  std::uint64_t next_message_id_ = 1;
  std::uint64_t retransmissions_ = 0;
  std::uint64_t lost_after_retry_ = 0;
  std::map<LinkClass, LinkCounters> counters_;
};

}  // namespace twinsim
