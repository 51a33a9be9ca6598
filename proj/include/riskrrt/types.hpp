#pragma once

#include <Eigen/Core>
#include <cmath>

namespace riskrrt {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = 3.14159265358979323846;

/// Axis-aligned sampling region in meters, [min, max) per axis.
struct MapBounds {
  Vec2 min{0.0, 0.0};
  Vec2 max{0.0, 0.0};

  [[nodiscard]] double width() const { return max.x() - min.x(); }
  [[nodiscard]] double height() const { return max.y() - min.y(); }
  [[nodiscard]] bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  [[nodiscard]] Vec2 clamp(const Vec2& p) const {
    return {std::min(std::max(p.x(), min.x()), max.x()),
            std::min(std::max(p.y(), min.y()), max.y())};
  }
};

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r = kPi;
  return r;
}

}  // namespace riskrrt
