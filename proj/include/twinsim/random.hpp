#pragma once

// Deterministic random streams. Every stochastic component owns a named
// stream derived from the master seed, and all samplers are built from raw
// mt19937_64 output with explicit formulas. std::*_distribution is avoided
// on purpose: its output is implementation-defined, and replay tests require
// byte-identical traces across toolchains.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <utility>

namespace twinsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable 64-bit hash of a stream label (FNV-1a).
inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(master ^ hash_label(label));
}

class RngStream {
 public:
  RngStream() : gen_(0) {}
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}
  RngStream(std::uint64_t master, std::string_view label)
      : gen_(derive_seed(master, label)) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe under log().
  double uniform_pos() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Box-Muller pair of independent standard normals (consumes 2 draws).
  std::pair<double, double> gaussian_pair() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  /// Exponential inter-arrival sample; rate must be > 0.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

 private:
  std::mt19937_64 gen_;
};

/// Triangular distribution on [min, max] with the given mode, sampled by
/// inverse CDF. Degenerate spans collapse to the point value.
struct TriangularDist {
  double min = 0.0;
  double mode = 0.0;
  double max = 0.0;

  bool valid() const { return min <= mode && mode <= max; }

  double mean() const { return (min + mode + max) / 3.0; }

  double sample(RngStream& rng) const {
    const double u = rng.uniform();
    const double span = max - min;
    if (span <= 0.0) return min;
    const double cut = (mode - min) / span;
    if (u < cut) {
      return min + std::sqrt(u * span * (mode - min));
    }
    return max - std::sqrt((1.0 - u) * span * (max - mode));
  }
};

}  // namespace twinsim
