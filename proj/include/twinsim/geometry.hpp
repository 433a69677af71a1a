#pragma once

// Planar geometry primitives shared across the simulator. Units are meters
// and radians everywhere; frames are right-handed with counter-clockwise
// positive headings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace twinsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm_sq(const Vec2& a) { return dot(a, a); }
inline double norm(const Vec2& a) { return std::sqrt(norm_sq(a)); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

/// Pose of a local frame expressed in the global frame.
struct Pose2 {
  Vec2 position;
  double heading = 0.0;  // radians, CCW from +x
};

/// Maps a point given in the frame of `pose` into the global frame.
inline Vec2 to_global(const Pose2& pose, const Vec2& local) {
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  return {pose.position.x + c * local.x - s * local.y,
          pose.position.y + s * local.x + c * local.y};
}

/// Maps a global point into the frame of `pose`. Inverse of to_global.
inline Vec2 to_local(const Pose2& pose, const Vec2& global) {
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  const Vec2 d = global - pose.position;
  return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

using Polyline = std::vector<Vec2>;

/// Sum of chord lengths.
inline double polyline_length(const Polyline& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    len += distance(pts[i - 1], pts[i]);
  }
  return len;
}

/// Point at arc length `s` along the polyline, clamped to [0, length].
inline Vec2 point_at_arc(const Polyline& pts, double s) {
  if (pts.empty()) return {};
  if (s <= 0.0) return pts.front();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double chord = distance(pts[i - 1], pts[i]);
    if (s <= chord) {
      if (chord == 0.0) return pts[i - 1];
      const double t = s / chord;
      return pts[i - 1] + (pts[i] - pts[i - 1]) * t;
    }
    s -= chord;
  }
  return pts.back();
}

/// Tangent heading at arc length `s`; the heading of the chord containing s.
inline double heading_at_arc(const Polyline& pts, double s) {
  if (pts.size() < 2) return 0.0;
  s = std::max(0.0, s);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double chord = distance(pts[i - 1], pts[i]);
    if (s <= chord || i + 1 == pts.size()) {
      const Vec2 d = pts[i] - pts[i - 1];
      return std::atan2(d.y, d.x);
    }
    s -= chord;
  }
  return 0.0;
}

struct Projection {
  double arc = 0.0;       // arc length of the foot of projection
  double distance = 0.0;  // perpendicular distance from point to polyline
};

/// Closest point on the polyline. Among equidistant feet the smallest arc
/// wins, so results are deterministic.
inline Projection project_point(const Polyline& pts, const Vec2& p) {
  Projection best{0.0, std::numeric_limits<double>::infinity()};
  double arc_base = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Vec2& a = pts[i - 1];
    const Vec2& b = pts[i];
    const double chord_sq = norm_sq(b - a);
    double t = 0.0;
    if (chord_sq > 0.0) {
      t = std::clamp(dot(p - a, b - a) / chord_sq, 0.0, 1.0);
    }
    const Vec2 foot = a + (b - a) * t;
    const double d = distance(p, foot);
    if (d < best.distance) {
      best.distance = d;
      best.arc = arc_base + t * std::sqrt(chord_sq);
    }
    arc_base += std::sqrt(chord_sq);
  }
  if (pts.size() == 1) {
    best.distance = distance(p, pts[0]);
    best.arc = 0.0;
  }
  return best;
}

}  // namespace twinsim
