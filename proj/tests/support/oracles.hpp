#pragma once

// Independent reference computations. Nothing here calls into the code
// paths it is used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "morphkit/geometry.hpp"
#include "morphkit/scoring.hpp"
#include "morphkit/triangulation.hpp"

namespace morphkit::testing {

using Triple = std::array<int, 3>;

struct Circle {
  double cx, cy, r;
};

/// Circumcircle from the perpendicular-bisector formula.
inline Circle circumcircle(const Point2& a, const Point2& b, const Point2& c) {
  const double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
  const double a2 = a.x * a.x + a.y * a.y;
  const double b2 = b.x * b.x + b.y * b.y;
  const double c2 = c.x * c.x + c.y * c.y;
  const double ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
  const double uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
  return {ux, uy, std::hypot(a.x - ux, a.y - uy)};
}

inline bool strictly_inside(const Circle& c, const Point2& p, double rel_margin) {
  return std::hypot(p.x - c.cx, p.y - c.cy) < c.r * (1.0 - rel_margin);
}

inline double signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

/// Andrew's monotone chain; returns hull vertices counter-clockwise without
/// collinear points.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  if (pts.size() < 3) return pts;
  std::vector<Point2> h(2 * pts.size());
  std::size_t k = 0;
  auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  for (const Point2& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

inline double polygon_area(const std::vector<Point2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

inline double polygon_perimeter(const std::vector<Point2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    s += std::hypot(a.x - b.x, a.y - b.y);
  }
  return s;
}

struct MeshCheck {
  bool positive_areas = true;
  bool empty_circumcircles = true;
  bool tiles_hull = true;
  bool edges_shared = true;
  bool all_vertices_used = true;
  std::string detail;

  bool ok() const {
    return positive_areas && empty_circumcircles && tiles_hull && edges_shared && all_vertices_used;
  }
};

/// Exhaustive validation of a Delaunay mesh: every triangle positive, no
/// vertex strictly inside any circumcircle (relative margin 1e-9), total
/// area equal to the hull area (1e-6 relative), interior edges shared by two
/// triangles and boundary edges by one, with boundary length equal to the
/// hull perimeter.
inline MeshCheck check_delaunay(std::span<const Point2> pts, const TriangleMesh& mesh) {
  MeshCheck out;
  double total = 0.0;
  std::map<std::pair<int, int>, int> edges;
  std::vector<char> used(pts.size(), 0);
  for (const auto& t : mesh.triangles) {
    const double area = signed_area(pts[t[0]], pts[t[1]], pts[t[2]]);
    if (!(area > 1e-12)) {
      out.positive_areas = false;
      out.detail += "non-positive triangle; ";
    }
    total += area;
    const Circle c = circumcircle(pts[t[0]], pts[t[1]], pts[t[2]]);
    for (std::size_t v = 0; v < pts.size(); ++v) {
      if (static_cast<int>(v) == t[0] || static_cast<int>(v) == t[1] || static_cast<int>(v) == t[2]) continue;
      if (strictly_inside(c, pts[v], 1e-9)) {
        out.empty_circumcircles = false;
        out.detail += "vertex " + std::to_string(v) + " inside a circumcircle; ";
      }
    }
    for (int i = 0; i < 3; ++i) {
      used[t[i]] = 1;
      const int a = t[i];
      const int b = t[(i + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  }
  const std::vector<Point2> hull = convex_hull(std::vector<Point2>(pts.begin(), pts.end()));
  const double hull_area = polygon_area(hull);
  if (std::abs(total - hull_area) > 1e-6 * hull_area) {
    out.tiles_hull = false;
    out.detail += "area " + std::to_string(total) + " vs hull " + std::to_string(hull_area) + "; ";
  }
  double boundary = 0.0;
  for (const auto& [e, n] : edges) {
    if (n > 2) {
      out.edges_shared = false;
      out.detail += "edge used " + std::to_string(n) + " times; ";
    }
    if (n == 1) boundary += std::hypot(pts[e.first].x - pts[e.second].x, pts[e.first].y - pts[e.second].y);
  }
  const double perimeter = polygon_perimeter(hull);
  if (std::abs(boundary - perimeter) > 1e-6 * perimeter) {
    out.edges_shared = false;
    out.detail += "boundary length " + std::to_string(boundary) + " vs hull perimeter " +
                  std::to_string(perimeter) + "; ";
  }
  if (std::count(used.begin(), used.end(), 0) != 0) {
    out.all_vertices_used = false;
    out.detail += "unused vertex; ";
  }
  return out;
}

/// All triples whose circumcircle contains no other point. For points in
/// general position this is exactly the Delaunay triangulation.
inline std::set<Triple> brute_force_delaunay(std::span<const Point2> pts) {
  std::set<Triple> out;
  const int n = static_cast<int>(pts.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        if (std::abs(signed_area(pts[i], pts[j], pts[k])) < 1e-12) continue;
        const Circle c = circumcircle(pts[i], pts[j], pts[k]);
        bool empty = true;
        for (int v = 0; v < n && empty; ++v) {
          if (v != i && v != j && v != k && strictly_inside(c, pts[v], 0.0)) empty = false;
        }
        if (empty) out.insert({i, j, k});
      }
    }
  }
  return out;
}

inline std::set<Triple> as_sorted_triples(const TriangleMesh& mesh) {
  std::set<Triple> out;
  for (auto t : mesh.triangles) {
    std::sort(t.begin(), t.end());
    out.insert(t);
  }
  return out;
}

// ---- metric oracles -------------------------------------------------------

inline double fmr_loop(std::span<const double> impostor, double t) {
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < impostor.size(); ++i) {
    if (impostor[i] >= t) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(impostor.size());
}

inline double fnmr_loop(std::span<const double> genuine, double t) {
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < genuine.size(); ++i) {
    if (!(genuine[i] >= t)) ++rejected;
  }
  return static_cast<double>(rejected) / static_cast<double>(genuine.size());
}

inline double mmpmr_loop(std::span<const MorphGroup> groups, double t) {
  std::size_t ok = 0;
  for (const MorphGroup& g : groups) {
    bool both = true;
    for (const SubjectScore& s : g.subjects) {
      if (!(s.score >= t)) both = false;
    }
    if (both) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(groups.size());
}

inline double mmpmr_any_loop(std::span<const MorphGroup> groups, double t) {
  std::size_t ok = 0;
  for (const MorphGroup& g : groups) {
    if (g.subjects[0].score >= t || g.subjects[1].score >= t) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(groups.size());
}

/// Every observed score plus the next double above the maximum, ascending.
inline std::vector<double> threshold_candidates(std::span<const double> scores) {
  std::set<double> c(scores.begin(), scores.end());
  c.insert(std::nextafter(*c.rbegin(), std::numeric_limits<double>::infinity()));
  return {c.begin(), c.end()};
}

/// Minimal candidate threshold whose FMR meets the target. Uses the nested
/// loop for small sets and binary search over a sorted copy for large ones.
inline double threshold_sweep(std::span<const double> impostor, double target) {
  const std::vector<double> candidates = threshold_candidates(impostor);
  if (impostor.size() <= 3000) {
    for (double t : candidates) {
      if (fmr_loop(impostor, t) <= target) return t;
    }
  } else {
    std::vector<double> asc(impostor.begin(), impostor.end());
    std::sort(asc.begin(), asc.end());
    const double n = static_cast<double>(asc.size());
    for (double t : candidates) {
      const auto below = std::lower_bound(asc.begin(), asc.end(), t) - asc.begin();
      if (static_cast<double>(asc.size() - static_cast<std::size_t>(below)) / n <= target) return t;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace morphkit::testing
