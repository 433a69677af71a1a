#pragma once

// Cloud plane: channel synchronization, global-frame transform, cooperative
// detection fusion, motion classification and per-segment occupancy.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "twinsim/edge.hpp"
#include "twinsim/world.hpp"

namespace twinsim {

enum class MotionState { moving, stationary };

struct FusedObject {
  Vec2 global_position;
  ObjectClass cls = ObjectClass::vehicle;
  Dims dims;
  std::vector<std::string> supporting_rsus;  // sorted, unique, non-empty
  double stamp = 0.0;
  MotionState motion = MotionState::stationary;  // provisional until tracked
};

struct SegmentOccupancy {
  int object_count = 0;
  double occupancy = 0.0;  // min(1, count / capacity)
};

struct OccupancySnapshot {
  double stamp = 0.0;
  std::map<std::string, SegmentOccupancy> per_segment;  // every segment present
  int unassigned = 0;

  double occupancy_of(const std::string& segment_id) const {
    auto it = per_segment.find(segment_id);
    return it == per_segment.end() ? 0.0 : it->second.occupancy;
  }
};

/// Rigid transform of a detection into the global frame using the observing
/// RSU's pose. Throws when the ids disagree.
inline Vec2 detection_to_global(const Detection& det, const RsuSite& rsu) {
  if (det.rsu_id != rsu.id) {
    throw ValidationError("detection rsu id " + det.rsu_id + " does not match rsu " + rsu.id);
  }
  return to_global(rsu.pose, det.local_position);
}

// ---------------------------------------------------------------------------
// Channel synchronization
// ---------------------------------------------------------------------------

/// Partitions incoming detections into fixed windows [k*w, (k+1)*w). A window
/// can be collected once; anything stamped inside an already-collected window
/// is late and dropped (counted). Batches are ordered by (stamp, rsu_id,
/// arrival sequence) so emission is deterministic.
class Synchronizer {
 public:
  explicit Synchronizer(double window) : window_(window) {
    if (window <= 0.0) throw ValidationError("synchronizer window must be > 0");
  }

  double window() const { return window_; }
  std::uint64_t late_dropped() const { return late_dropped_; }

  /// True if accepted, false if the detection was late.
  bool push(const Detection& det) {
    if (det.stamp < emitted_up_to_) {
      ++late_dropped_;
      return false;
    }
    buffer_.push_back({det, seq_++});
    return true;
  }

  /// Emits the batch for the window ending at `window_end` and marks every
  /// window before it as emitted.
  std::vector<Detection> collect(double window_end) {
    std::vector<Buffered> batch;
    auto it = buffer_.begin();
    while (it != buffer_.end()) {
      if (it->det.stamp < window_end) {
        if (it->det.stamp >= window_end - window_) batch.push_back(*it);
        // stamps below the window start belong to windows now marked emitted
        it = buffer_.erase(it);
      } else {
        ++it;
      }
    }
    emitted_up_to_ = std::max(emitted_up_to_, window_end);
    std::sort(batch.begin(), batch.end(), [](const Buffered& a, const Buffered& b) {
      if (a.det.stamp != b.det.stamp) return a.det.stamp < b.det.stamp;
      if (a.det.rsu_id != b.det.rsu_id) return a.det.rsu_id < b.det.rsu_id;
      return a.seq < b.seq;
    });
    std::vector<Detection> out;
    out.reserve(batch.size());
    for (const auto& b : batch) out.push_back(b.det);
    return out;
  }

 private:
  struct Buffered {
    Detection det;
    std::uint64_t seq;
  };

  double window_;
  double emitted_up_to_ = 0.0;
  std::uint64_t seq_ = 0;
  std::uint64_t late_dropped_ = 0;
  std::vector<Buffered> buffer_;
};

// ---------------------------------------------------------------------------
// Fusion
// ---------------------------------------------------------------------------

/// Detection already placed in the global frame, ready for fusion.
struct GlobalDetection {
  Vec2 position;
  ObjectClass cls = ObjectClass::vehicle;
  Dims dims;
  double confidence = 1.0;
  std::string rsu_id;
  double stamp = 0.0;
};

inline GlobalDetection make_global(const Detection& det, const RsuSite& rsu) {
  return {detection_to_global(det, rsu), det.cls, det.dims, det.confidence, det.rsu_id,
          det.stamp};
}

/// Single-linkage clustering over the graph connecting same-class detections
/// within `epsilon`. Each cluster becomes one FusedObject at the
/// confidence-weighted mean position; supporting RSUs are the union. Output
/// clusters are ordered by their smallest member index, so fusion of a
/// deterministic batch is deterministic.
inline std::vector<FusedObject> fuse(const std::vector<GlobalDetection>& batch,
                                     double epsilon) {
  if (epsilon <= 0.0) throw ValidationError("fusion epsilon must be > 0");
  const std::size_t n = batch.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);  // smaller index becomes the root
    parent[b] = a;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (batch[i].cls != batch[j].cls) continue;
      if (distance(batch[i].position, batch[j].position) <= epsilon) unite(i, j);
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> clusters;  // root -> members
  for (std::size_t i = 0; i < n; ++i) clusters[find(i)].push_back(i);

  std::vector<FusedObject> out;
  out.reserve(clusters.size());
  for (const auto& [root, members] : clusters) {
    FusedObject fo;
    double wsum = 0.0;
    Vec2 pos{0.0, 0.0};
    Dims dims{0.0, 0.0};
    for (const std::size_t m : members) {
      const GlobalDetection& d = batch[m];
      wsum += d.confidence;
      pos = pos + d.position * d.confidence;
      dims.length += d.dims.length * d.confidence;
      dims.width += d.dims.width * d.confidence;
      fo.stamp = std::max(fo.stamp, d.stamp);
      fo.supporting_rsus.push_back(d.rsu_id);
    }
    fo.cls = batch[members.front()].cls;
    fo.global_position = pos * (1.0 / wsum);
    fo.dims = {dims.length / wsum, dims.width / wsum};
    std::sort(fo.supporting_rsus.begin(), fo.supporting_rsus.end());
    fo.supporting_rsus.erase(
        std::unique(fo.supporting_rsus.begin(), fo.supporting_rsus.end()),
        fo.supporting_rsus.end());
    out.push_back(std::move(fo));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Motion classification
// ---------------------------------------------------------------------------

struct TrackPoint {
  double stamp = 0.0;
  Vec2 position;
};

/// Stationary iff the net displacement rate across the history stays below
/// v_stationary. Fewer than two points cannot be judged and default to
/// stationary (provisional).
inline MotionState classify_motion(const std::deque<TrackPoint>& history,
                                   double v_stationary) {
  if (history.size() < 2) return MotionState::stationary;
  const double elapsed = history.back().stamp - history.front().stamp;
  if (elapsed <= 0.0) return MotionState::stationary;
  const double rate = distance(history.back().position, history.front().position) / elapsed;
  return rate < v_stationary ? MotionState::stationary : MotionState::moving;
}

/// Nearest-neighbour track continuity across fusion windows, bounded to the
/// last `k` points per track. Association is greedy in fused-object order
/// with ties resolved by track index.
class TrackSet {
 public:
  TrackSet(std::size_t k, double v_stationary, double gate)
      : k_(std::max<std::size_t>(2, k)), v_stationary_(v_stationary), gate_(gate) {}

  /// Updates tracks with this window's fused objects (in place: assigns each
  /// object's motion state).
  void update(std::vector<FusedObject>& fused, double stamp) {
    std::vector<bool> taken(tracks_.size(), false);
    for (auto& fo : fused) {
      std::optional<std::size_t> best;
      double best_dist = gate_;
      for (std::size_t t = 0; t < tracks_.size(); ++t) {
        if (taken[t] || tracks_[t].cls != fo.cls) continue;
        const double d = distance(tracks_[t].history.back().position, fo.global_position);
        if (d <= best_dist && (!best || d < best_dist)) {
          best = t;
          best_dist = d;
        }
      }
      std::size_t idx;
      if (best) {
        idx = *best;
        taken[idx] = true;
      } else {
        tracks_.push_back({fo.cls, {}, stamp});
        taken.push_back(true);
        idx = tracks_.size() - 1;
      }
      Track& tr = tracks_[idx];
      tr.history.push_back({stamp, fo.global_position});
      while (tr.history.size() > k_) tr.history.pop_front();
      tr.last_seen = stamp;
      fo.motion = classify_motion(tr.history, v_stationary_);
    }
    prune(stamp);
  }

 private:
  struct Track {
    ObjectClass cls;
    std::deque<TrackPoint> history;
    double last_seen = 0.0;
  };

  void prune(double now) {
    std::vector<Track> kept;
    kept.reserve(tracks_.size());
    for (auto& t : tracks_) {
      if (now - t.last_seen <= stale_after_) kept.push_back(std::move(t));
    }
    tracks_ = std::move(kept);
  }

  std::size_t k_;
  double v_stationary_;
  double gate_;
  double stale_after_ = 2.0;  // seconds without an update before a track dies
  std::vector<Track> tracks_;
};

// ---------------------------------------------------------------------------
// Occupancy
// ---------------------------------------------------------------------------

/// Projects each fused object onto the network and normalizes counts by
/// segment capacity. Objects outside the lateral corridor are counted as
/// unassigned. Every segment appears in the snapshot, congested or not.
inline OccupancySnapshot build_occupancy(const std::vector<FusedObject>& fused,
                                         const RoadNetwork& net, double lateral_max,
                                         double stamp) {
  OccupancySnapshot snap;
  snap.stamp = stamp;
  for (const auto& [id, seg] : net.segments) {
    (void)seg;
    snap.per_segment[id] = SegmentOccupancy{};
  }
  for (const auto& fo : fused) {
    const auto loc = locate_on_segment(net, fo.global_position, lateral_max);
    if (!loc) {
      ++snap.unassigned;
      continue;
    }
    ++snap.per_segment[loc->segment_id].object_count;
  }
  for (auto& [id, occ] : snap.per_segment) {
    const int capacity = net.segment(id).capacity;
    occ.occupancy = std::min(1.0, static_cast<double>(occ.object_count) / capacity);
  }
  return snap;
}

/// Removes every fused object within `epsilon` of `ego_position`: the ego
/// must not count toward the congestion it is avoiding. Dropout can split the
/// ego's track into several fused fragments, so all matches go, not just the
/// nearest.
inline void exclude_ego_track(std::vector<FusedObject>& fused, const Vec2& ego_position,
                              double epsilon) {
  std::erase_if(fused, [&](const FusedObject& f) {
    return distance(f.global_position, ego_position) <= epsilon;
  });
}

/// History-aware variant: each fused object is compared against the ego
/// report closest to the object's own stamp, so a moving ego still matches
/// its detections even when fusion lags sensing.
inline void exclude_ego_track(std::vector<FusedObject>& fused,
                              const std::vector<TrackPoint>& ego_reports, double epsilon) {
  if (ego_reports.empty()) return;
  auto position_near = [&](double stamp) {
    const TrackPoint* best = &ego_reports.front();
    for (const auto& r : ego_reports) {
      if (std::abs(r.stamp - stamp) < std::abs(best->stamp - stamp)) best = &r;
    }
    return best->position;
  };
  std::erase_if(fused, [&](const FusedObject& f) {
    return distance(f.global_position, position_near(f.stamp)) <= epsilon;
  });
}

}  // namespace twinsim
