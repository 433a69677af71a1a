#pragma once

// Simulated RSU edge: geometric sensing of the ground-truth snapshot within
// range, then a noisy object-level detector with a sampled compute latency.
// Raw point clouds are not modeled; only object-level results ever leave the
// edge.

#include <string>
#include <vector>

#include "twinsim/random.hpp"
#include "twinsim/world.hpp"

namespace twinsim {

struct Observation {
  Vec2 local_position;  // RSU frame
  ObjectClass cls = ObjectClass::vehicle;
  Dims dims;
};

struct SensorFrame {
  std::string rsu_id;
  double stamp = 0.0;
  std::vector<Observation> observations;
};

struct Detection {
  std::string rsu_id;
  double stamp = 0.0;
  Vec2 local_position;
  ObjectClass cls = ObjectClass::vehicle;
  Dims dims;
  double confidence = 1.0;
};

/// Detector error model plus the edge compute-latency distribution. Latency
/// defaults come from measured edge-computation times; noise defaults are
/// deliberately conservative and fully configurable.
struct NoiseModel {
  double sigma_pos = 0.1;  // m, per axis
  double p_miss = 0.05;
  double c_min = 0.5;
  TriangularDist compute_latency{0.102, 0.107, 0.173};  // seconds
};

/// Geometric sensor: every object whose global distance to the RSU is within
/// sensing_range, expressed in the RSU local frame. Objects are emitted in
/// registry (id) order.
inline SensorFrame sense(const ObjectRegistry& snapshot, const RsuSite& rsu, double stamp) {
  SensorFrame frame;
  frame.rsu_id = rsu.id;
  frame.stamp = stamp;
  for (const auto& obj : snapshot.objects) {
    if (distance(obj.pose.position, rsu.pose.position) > rsu.sensing_range) continue;
    frame.observations.push_back(
        {to_local(rsu.pose, obj.pose.position), obj.cls, obj.dims});
  }
  return frame;
}

struct DetectOutput {
  std::vector<Detection> detections;
  double compute_latency = 0.0;  // seconds
};

/// Object detector model. Per observation, in frame order: one uniform draw
/// decides a miss, one gaussian pair perturbs the position, one uniform draw
/// sets the confidence in [c_min, 1]. Draws happen even when their scale is
/// zero so the stream stays aligned across configurations. One latency sample
/// per frame concludes the draw sequence.
inline DetectOutput detect(const SensorFrame& frame, const NoiseModel& noise, RngStream& rng) {
  DetectOutput out;
  for (const auto& obs : frame.observations) {
    const double u_miss = rng.uniform();
    const auto [nx, ny] = rng.gaussian_pair();
    const double u_conf = rng.uniform();
    if (u_miss < noise.p_miss) continue;
    Detection det;
    det.rsu_id = frame.rsu_id;
    det.stamp = frame.stamp;
    det.local_position = {obs.local_position.x + noise.sigma_pos * nx,
                          obs.local_position.y + noise.sigma_pos * ny};
    det.cls = obs.cls;
    det.dims = obs.dims;
    det.confidence = noise.c_min + (1.0 - noise.c_min) * u_conf;
    out.detections.push_back(det);
  }
  out.compute_latency = noise.compute_latency.sample(rng);
  return out;
}

}  // namespace twinsim
