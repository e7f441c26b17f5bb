#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>

namespace vortex {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Area of the torus [-pi, pi)^2.
inline constexpr double kTorusArea = kTwoPi * kTwoPi;

/// Reduce a coordinate to the canonical representative in [-pi, pi).
inline double wrap_coordinate(double x) {
  double r = x - kTwoPi * std::floor((x + kPi) / kTwoPi);
  // floor() can leave r == pi (or a hair below -pi) after rounding.
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  if (r >= kPi) r = -kPi;
  return r;
}

inline Vec2 wrap(const Vec2& x) { return {wrap_coordinate(x.x()), wrap_coordinate(x.y())}; }

/// Minimal-image difference x - y, each component in [-pi, pi).
inline Vec2 torus_delta(const Vec2& x, const Vec2& y) { return wrap(x - y); }

inline double torus_distance(const Vec2& x, const Vec2& y) { return torus_delta(x, y).norm(); }

}  // namespace vortex
