#pragma once

#include <cstdint>
#include <random>

#include "riskrrt/types.hpp"

namespace riskrrt {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 engine bits.
/// Variate consumption is exactly one engine call; samplers rely on that
/// to keep random streams comparable across code paths.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform point over rectangular bounds. Consumes two engine calls (x, then y).
inline Vec2 uniform_point(Rng& rng, const MapBounds& b) {
  const double x = uniform_in(rng, b.min.x(), b.max.x());
  const double y = uniform_in(rng, b.min.y(), b.max.y());
  return {x, y};
}

/// Isotropic 2-D gaussian via one Box-Muller pair (two engine calls).
inline Vec2 gaussian_point(Rng& rng, const Vec2& mean, double sigma) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps log finite
  const double u2 = uniform01(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return {mean.x() + sigma * r * std::cos(2.0 * kPi * u2),
          mean.y() + sigma * r * std::sin(2.0 * kPi * u2)};
}

}  // namespace riskrrt
