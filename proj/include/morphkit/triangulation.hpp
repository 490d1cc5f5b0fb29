#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morphkit/geometry.hpp"

namespace morphkit {

class LandmarkSet;

/// Delaunay triangulation over an indexed point set. Triangles hold indices
/// into that set, are counter-clockwise, start at their smallest index and
/// are sorted lexicographically.
struct TriangleMesh {
  std::size_t vertex_count = 0;
  std::vector<std::array<int, 3>> triangles;

  std::size_t size() const noexcept { return triangles.size(); }
  Triangle2 corners(std::span<const Point2> points, std::size_t t) const {
    const auto& tri = triangles[t];
    return {points[tri[0]], points[tri[1]], points[tri[2]]};
  }
};

/// Bowyer-Watson insertion in input order. The super-triangle is symbolic:
/// a single vertex at infinity joined to every hull edge, so the hull is
/// always complete. Points on an existing circumcircle do not break that
/// triangle, so cocircular ties resolve by insertion order.
///
/// Throws Validation for fewer than 3 points, coincident points or an
/// all-collinear input.
TriangleMesh delaunay(std::span<const Point2> points);
TriangleMesh delaunay(const LandmarkSet& landmarks);

/// Index of the lowest-numbered triangle containing p (boundary inclusive),
/// or nullopt if p lies outside the convex hull.
std::optional<std::size_t> locate(const TriangleMesh& mesh, std::span<const Point2> points,
                                  const Point2& p);

/// True when p lies in the closed triangle, with a small relative tolerance.
/// locate() and the warp rasterizer share this predicate.
bool triangle_contains(const Triangle2& tri, const Point2& p) noexcept;

/// Weights (w0, w1, w2) with w0+w1+w2 = 1 and p = sum wi*vi. Throws
/// Degenerate for a zero-area triangle.
std::array<double, 3> barycentric(const Point2& p, const Triangle2& tri);

/// One "i j k" line per triangle.
void write_mesh(std::ostream& out, const TriangleMesh& mesh);
std::string format_mesh(const TriangleMesh& mesh);

}  // namespace morphkit
