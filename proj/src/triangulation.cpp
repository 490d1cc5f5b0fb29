#include "morphkit/triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <boost/multiprecision/cpp_int.hpp>

#include "morphkit/error.hpp"
#include "morphkit/landmarks.hpp"

namespace morphkit {

namespace {

constexpr int kInfinite = -1;
constexpr double kRelativeEps = 1e-12;

using boost::multiprecision::cpp_rational;

// Forward error bounds for the floating-point evaluation of the two
// determinants (Shewchuk 1997). Inside the bound the sign is recomputed in
// exact rational arithmetic.
constexpr double kUnitRoundoff = 0x1p-53;
constexpr double kOrientBound = (3.0 + 16.0 * kUnitRoundoff) * kUnitRoundoff;
constexpr double kIncircleBound = (10.0 + 96.0 * kUnitRoundoff) * kUnitRoundoff;

int sign_of(const cpp_rational& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

/// Exact sign of orient2d(a, b, c).
int orient_sign(const Point2& a, const Point2& b, const Point2& c) {
  const double left = (a.x - c.x) * (b.y - c.y);
  const double right = (a.y - c.y) * (b.x - c.x);
  const double det = left - right;
  const double bound = kOrientBound * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  const cpp_rational acx = cpp_rational(a.x) - c.x, acy = cpp_rational(a.y) - c.y;
  const cpp_rational bcx = cpp_rational(b.x) - c.x, bcy = cpp_rational(b.y) - c.y;
  return sign_of(acx * bcy - acy * bcx);
}

/// Exact sign of the in-circle determinant: positive when d lies inside the
/// circle through the counter-clockwise triangle (a, b, c).
int incircle_sign(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  const double bound = kIncircleBound * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;
  const cpp_rational ex = cpp_rational(a.x) - d.x, ey = cpp_rational(a.y) - d.y;
  const cpp_rational fx = cpp_rational(b.x) - d.x, fy = cpp_rational(b.y) - d.y;
  const cpp_rational gx = cpp_rational(c.x) - d.x, gy = cpp_rational(c.y) - d.y;
  const cpp_rational exact = (ex * ex + ey * ey) * (fx * gy - gx * fy) +
                             (fx * fx + fy * fy) * (gx * ey - ex * gy) +
                             (gx * gx + gy * gy) * (ex * fy - fx * ey);
  return sign_of(exact);
}

struct Face {
  std::array<int, 3> v;
  // nb[i] is the face across the edge opposite v[i].
  std::array<int, 3> nb{-1, -1, -1};
  bool alive = true;

  bool infinite() const noexcept {
    return v[0] == kInfinite || v[1] == kInfinite || v[2] == kInfinite;
  }
  int slot_of(int vertex) const noexcept {
    for (int i = 0; i < 3; ++i) {
      if (v[i] == vertex) return i;
    }
    return -1;
  }
};

class BowyerWatson {
 public:
  explicit BowyerWatson(std::span<const Point2> points) : points_(points) {}

  TriangleMesh run() {
    const int n = static_cast<int>(points_.size());
    int third = -1;
    for (int k = 2; k < n; ++k) {
      if (orient_sign(points_[0], points_[1], points_[k]) != 0) {
        third = k;
        break;
      }
    }
    if (third < 0) throw Error(ErrorKind::Validation, "all points are collinear");
    seed(0, 1, third);
    for (int k = 2; k < n; ++k) {
      if (k != third) insert(k);
    }
    return collect();
  }

 private:
  const Point2& at(int i) const noexcept { return points_[static_cast<std::size_t>(i)]; }

  void seed(int a, int b, int c) {
    if (orient_sign(at(a), at(b), at(c)) < 0) std::swap(b, c);
    faces_.push_back({{a, b, c}});
    faces_.push_back({{b, a, kInfinite}});
    faces_.push_back({{c, b, kInfinite}});
    faces_.push_back({{a, c, kInfinite}});
    link_all();
  }

  void link_all() {
    std::unordered_map<long long, std::pair<int, int>> edges;
    auto key = [](int u, int w) {
      return (static_cast<long long>(u) + 1) * (1LL << 32) + (static_cast<long long>(w) + 1);
    };
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
      for (int i = 0; i < 3; ++i) {
        edges[key(faces_[f].v[(i + 1) % 3], faces_[f].v[(i + 2) % 3])] = {f, i};
      }
    }
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
      for (int i = 0; i < 3; ++i) {
        const auto it = edges.find(key(faces_[f].v[(i + 2) % 3], faces_[f].v[(i + 1) % 3]));
        if (it != edges.end()) faces_[f].nb[i] = it->second.first;
      }
    }
  }

  // The finite edge of an infinite face, ordered so the vertex at infinity
  // lies to its left.
  std::pair<int, int> hull_edge(const Face& f) const noexcept {
    const int s = f.slot_of(kInfinite);
    return {f.v[(s + 1) % 3], f.v[(s + 2) % 3]};
  }

  bool in_conflict(const Face& f, const Point2& p) const noexcept {
    if (!f.infinite()) return incircle_sign(at(f.v[0]), at(f.v[1]), at(f.v[2]), p) > 0;
    const auto [u, w] = hull_edge(f);
    const int o = orient_sign(at(u), at(w), p);
    if (o != 0) return o > 0;
    // On the hull line: only the open segment splits this edge.
    const Point2& a = at(u);
    const Point2& b = at(w);
    return (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y) > 0.0 &&
           (p.x - b.x) * (a.x - b.x) + (p.y - b.y) * (a.y - b.y) > 0.0;
  }

  int find_seed_face(const Point2& p) const {
    int best_outside = -1;
    double best_orient = 0.0;
    for (int f = 0; f < static_cast<int>(faces_.size()); ++f) {
      const Face& face = faces_[f];
      if (!face.alive) continue;
      if (!face.infinite()) {
        const Point2& a = at(face.v[0]);
        const Point2& b = at(face.v[1]);
        const Point2& c = at(face.v[2]);
        if (orient_sign(a, b, p) >= 0 && orient_sign(b, c, p) >= 0 && orient_sign(c, a, p) >= 0 &&
            in_conflict(face, p)) {
          return f;
        }
      } else if (in_conflict(face, p)) {
        const auto [u, w] = hull_edge(face);
        const double o = orient2d(at(u), at(w), p);
        if (best_outside < 0 || o > best_orient) {
          best_outside = f;
          best_orient = o;
        }
      }
    }
    return best_outside;
  }

  struct BoundaryEdge {
    int from;
    int to;
    int outside;  // face across the edge, not in the cavity
  };

  void insert(int index) {
    const Point2& p = at(index);
    const int start = find_seed_face(p);
    if (start < 0) {
      throw Error(ErrorKind::Degenerate,
                  "triangulation: no conflict region for point " + std::to_string(index));
    }

    std::vector<char> in_cavity(faces_.size(), 0);
    std::vector<int> cavity{start};
    in_cavity[start] = 1;
    for (std::size_t q = 0; q < cavity.size(); ++q) {
      for (int nb : faces_[cavity[q]].nb) {
        if (nb >= 0 && !in_cavity[nb] && in_conflict(faces_[nb], p)) {
          in_cavity[nb] = 1;
          cavity.push_back(nb);
        }
      }
    }

    // Grow the cavity until every new finite triangle is properly oriented.
    std::vector<BoundaryEdge> boundary;
    for (;;) {
      boundary.clear();
      int offending = -1;
      for (int f : cavity) {
        const Face& face = faces_[f];
        for (int i = 0; i < 3; ++i) {
          const int nb = face.nb[i];
          if (in_cavity[nb]) continue;
          const int u = face.v[(i + 1) % 3];
          const int w = face.v[(i + 2) % 3];
          if (u != kInfinite && w != kInfinite && orient_sign(at(u), at(w), p) <= 0) {
            offending = nb;
          }
          boundary.push_back({u, w, nb});
        }
      }
      if (offending < 0) break;
      in_cavity[offending] = 1;
      cavity.push_back(offending);
    }
    if (boundary.size() != cavity.size() + 2) {
      throw Error(ErrorKind::Degenerate, "triangulation: cavity for point " +
                                             std::to_string(index) +
                                             " is not a disk (numerically degenerate input)");
    }

    for (int f : cavity) faces_[f].alive = false;
    std::unordered_map<int, int> starting_at;
    std::unordered_map<int, int> ending_at;
    std::vector<int> created;
    created.reserve(boundary.size());
    for (const BoundaryEdge& e : boundary) {
      const int f = static_cast<int>(faces_.size());
      Face face{{e.from, e.to, index}};
      face.nb[2] = e.outside;
      Face& outside = faces_[e.outside];
      for (int i = 0; i < 3; ++i) {
        if (outside.v[(i + 1) % 3] == e.to && outside.v[(i + 2) % 3] == e.from) outside.nb[i] = f;
      }
      faces_.push_back(face);
      starting_at[e.from] = f;
      ending_at[e.to] = f;
      created.push_back(f);
    }
    for (int f : created) {
      Face& face = faces_[f];
      face.nb[0] = starting_at.at(face.v[1]);
      face.nb[1] = ending_at.at(face.v[0]);
    }
  }

  TriangleMesh collect() const {
    TriangleMesh mesh;
    mesh.vertex_count = points_.size();
    for (const Face& f : faces_) {
      if (!f.alive || f.infinite()) continue;
      std::array<int, 3> t = f.v;
      const auto lowest = std::min_element(t.begin(), t.end()) - t.begin();
      std::rotate(t.begin(), t.begin() + lowest, t.end());
      mesh.triangles.push_back(t);
    }
    std::sort(mesh.triangles.begin(), mesh.triangles.end());
    return mesh;
  }

  std::span<const Point2> points_;
  std::vector<Face> faces_;
};

void require_distinct(std::span<const Point2> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a].x < points[b].x; });
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Point2& a = points[order[i]];
      const Point2& b = points[order[j]];
      if (b.x - a.x > kCoincidentTolerance) break;
      if (std::hypot(a.x - b.x, a.y - b.y) <= kCoincidentTolerance) {
        throw Error(ErrorKind::Validation, "points " + std::to_string(order[i]) + " and " +
                                               std::to_string(order[j]) + " coincide");
      }
    }
  }
}

double max_edge_sq(const Triangle2& t) noexcept {
  double m = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Point2& a = t[i];
    const Point2& b = t[(i + 1) % 3];
    m = std::max(m, (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
  }
  return m;
}

}  // namespace

TriangleMesh delaunay(std::span<const Point2> points) {
  if (points.size() < 3) {
    throw Error(ErrorKind::Validation,
                "triangulation needs at least 3 points, got " + std::to_string(points.size()));
  }
  for (const Point2& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorKind::Validation, "triangulation input is not finite");
    }
  }
  require_distinct(points);
  return BowyerWatson(points).run();
}

TriangleMesh delaunay(const LandmarkSet& landmarks) { return delaunay(landmarks.points()); }

bool triangle_contains(const Triangle2& tri, const Point2& p) noexcept {
  const double eps = -kRelativeEps * max_edge_sq(tri);
  return orient2d(tri[0], tri[1], p) >= eps && orient2d(tri[1], tri[2], p) >= eps &&
         orient2d(tri[2], tri[0], p) >= eps;
}

std::optional<std::size_t> locate(const TriangleMesh& mesh, std::span<const Point2> points,
                                  const Point2& p) {
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    if (triangle_contains(mesh.corners(points, t), p)) return t;
  }
  return std::nullopt;
}

std::array<double, 3> barycentric(const Point2& p, const Triangle2& tri) {
  const double area2 = orient2d(tri[0], tri[1], tri[2]);
  if (!(std::abs(area2) > kRelativeEps * max_edge_sq(tri))) {
    throw Error(ErrorKind::Degenerate, "barycentric coordinates of a degenerate triangle");
  }
  const double w0 = orient2d(tri[1], tri[2], p) / area2;
  const double w1 = orient2d(tri[2], tri[0], p) / area2;
  return {w0, w1, 1.0 - w0 - w1};
}

void write_mesh(std::ostream& out, const TriangleMesh& mesh) {
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

std::string format_mesh(const TriangleMesh& mesh) {
  std::ostringstream ss;
  write_mesh(ss, mesh);
  return ss.str();
}

}  // namespace morphkit
