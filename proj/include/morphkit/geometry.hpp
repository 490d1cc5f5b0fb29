#pragma once

#include <array>

namespace morphkit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

using Triangle2 = std::array<Point2, 3>;

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
inline double orient2d(const Point2& a, const Point2& b, const Point2& c) noexcept {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Row-major 2x3 matrix applied to column vectors (x, y, 1).
struct Affine2 {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  Point2 apply(const Point2& p) const noexcept {
    return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
  }
};

}  // namespace morphkit
