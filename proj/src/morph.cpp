#include "morphkit/morph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "csv.hpp"
#include "parallel.hpp"
#include "morphkit/error.hpp"
#include "morphkit/protocols.hpp"

namespace morphkit {

namespace {

constexpr double kDegenerateEps = 1e-12;

double max_edge_sq(const Triangle2& t) noexcept {
  double m = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double dx = t[i].x - t[(i + 1) % 3].x;
    const double dy = t[i].y - t[(i + 1) % 3].y;
    m = std::max(m, dx * dx + dy * dy);
  }
  return m;
}

void require_area(const Triangle2& t, const char* which) {
  const double area2 = orient2d(t[0], t[1], t[2]);
  if (!(std::abs(area2) > kDegenerateEps * max_edge_sq(t))) {
    throw Error(ErrorKind::Degenerate, std::string(which) + " triangle is degenerate");
  }
}

// owner[y*width + x] = lowest index of a triangle containing pixel center
// (x, y), or -1.
std::vector<int> rasterize_owners(const TriangleMesh& mesh, std::span<const Point2> points,
                                  int width, int height) {
  std::vector<int> owner(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), -1);
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    const Triangle2 tri = mesh.corners(points, t);
    double lo_x = tri[0].x, hi_x = tri[0].x, lo_y = tri[0].y, hi_y = tri[0].y;
    for (const Point2& p : tri) {
      lo_x = std::min(lo_x, p.x);
      hi_x = std::max(hi_x, p.x);
      lo_y = std::min(lo_y, p.y);
      hi_y = std::max(hi_y, p.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(lo_x)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(hi_x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(lo_y)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(hi_y)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int& o = owner[static_cast<std::size_t>(y) * width + x];
        if (o < 0 && triangle_contains(tri, {static_cast<double>(x), static_cast<double>(y)})) {
          o = static_cast<int>(t);
        }
      }
    }
  }
  return owner;
}

std::vector<Affine2> triangle_maps(const TriangleMesh& mesh, std::span<const Point2> src,
                                   std::span<const Point2> dst) {
  std::vector<Affine2> maps;
  maps.reserve(mesh.size());
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    maps.push_back(affine_from_triangles(mesh.corners(src, t), mesh.corners(dst, t)));
  }
  return maps;
}

void require_mesh_fits(const TriangleMesh& mesh, std::size_t count) {
  if (mesh.vertex_count != count) {
    throw Error(ErrorKind::Validation, "mesh was built over " + std::to_string(mesh.vertex_count) +
                                           " points but landmarks have " + std::to_string(count));
  }
}

bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

void MorphConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::Precondition, "alpha must lie in [0,1]");
  }
  if (geometry_alpha && !(*geometry_alpha >= 0.0 && *geometry_alpha <= 1.0)) {
    throw Error(ErrorKind::Precondition, "geometry alpha must lie in [0,1]");
  }
  if (tool_name.empty()) throw Error(ErrorKind::Precondition, "tool name must not be empty");
}

Affine2 affine_from_triangles(const Triangle2& src, const Triangle2& dst) {
  require_area(src, "source");
  require_area(dst, "destination");
  // src = src0 + A (p - dst0) with A = [s1-s0 s2-s0] [d1-d0 d2-d0]^-1.
  const double e00 = dst[1].x - dst[0].x, e01 = dst[2].x - dst[0].x;
  const double e10 = dst[1].y - dst[0].y, e11 = dst[2].y - dst[0].y;
  const double det = e00 * e11 - e01 * e10;
  const double i00 = e11 / det, i01 = -e01 / det;
  const double i10 = -e10 / det, i11 = e00 / det;

  const double f00 = src[1].x - src[0].x, f01 = src[2].x - src[0].x;
  const double f10 = src[1].y - src[0].y, f11 = src[2].y - src[0].y;

  Affine2 a;
  a.m[0] = f00 * i00 + f01 * i10;
  a.m[1] = f00 * i01 + f01 * i11;
  a.m[3] = f10 * i00 + f11 * i10;
  a.m[4] = f10 * i01 + f11 * i11;
  a.m[2] = src[0].x - (a.m[0] * dst[0].x + a.m[1] * dst[0].y);
  a.m[5] = src[0].y - (a.m[3] * dst[0].x + a.m[4] * dst[0].y);
  return a;
}

WarpResult warp_piecewise(const Raster& src, const LandmarkSet& src_lm,
                          const LandmarkSet& dst_lm, const TriangleMesh& mesh) {
  if (src_lm.size() != dst_lm.size()) {
    throw Error(ErrorKind::Validation, "landmark counts differ: " + std::to_string(src_lm.size()) +
                                           " vs " + std::to_string(dst_lm.size()));
  }
  require_mesh_fits(mesh, dst_lm.size());
  const int width = src.width();
  const int height = src.height();
  const std::vector<int> owner = rasterize_owners(mesh, dst_lm.points(), width, height);
  const std::vector<Affine2> maps = triangle_maps(mesh, src_lm.points(), dst_lm.points());

  WarpResult result{Raster(width, height), std::vector<unsigned char>(owner.size(), 0), 0};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (owner[i] < 0) continue;
      const Point2 s = maps[owner[i]].apply({static_cast<double>(x), static_cast<double>(y)});
      result.raster.set(x, y, sample_bilinear(src, s.x, s.y));
      result.coverage[i] = 1;
      ++result.covered_pixels;
    }
  }
  return result;
}

MorphResult morph_pair_detailed(const Raster& a, const LandmarkSet& la, const Raster& b,
                                const LandmarkSet& lb, const MorphConfig& cfg) {
  cfg.validate();
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::Dimension, "morph sources differ in size");
  }
  if (la.size() != lb.size() || la.scheme() != lb.scheme()) {
    throw Error(ErrorKind::Validation, "landmark sets differ in scheme or count");
  }
  const int width = a.width();
  const int height = a.height();
  const LandmarkSet src_a = cfg.border_augmentation ? with_border_points(la, width, height) : la;
  const LandmarkSet src_b = cfg.border_augmentation ? with_border_points(lb, width, height) : lb;

  LandmarkSet mean = weighted_mean_landmarks(src_a, src_b, cfg.shape_weight());
  TriangleMesh mesh = delaunay(mean);

  const std::vector<int> owner = rasterize_owners(mesh, mean.points(), width, height);
  const std::vector<Affine2> to_a = triangle_maps(mesh, src_a.points(), mean.points());
  const std::vector<Affine2> to_b = triangle_maps(mesh, src_b.points(), mean.points());

  const double wa = cfg.alpha;
  const double wb = 1.0 - cfg.alpha;
  Raster out(width, height);
  std::vector<unsigned char> coverage(owner.size(), 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      Color pa;
      Color pb;
      if (owner[i] >= 0) {
        const Point2 p{static_cast<double>(x), static_cast<double>(y)};
        const Point2 sa = to_a[owner[i]].apply(p);
        const Point2 sb = to_b[owner[i]].apply(p);
        pa = sample_bilinear(a, sa.x, sa.y);
        pb = sample_bilinear(b, sb.x, sb.y);
        coverage[i] = 1;
      } else {
        pa = a.pixel(x, y);
        pb = b.pixel(x, y);
      }
      Color c;
      for (int k = 0; k < Raster::kChannels; ++k) {
        c[k] = static_cast<float>(wa * pa[k] + wb * pb[k]);
      }
      out.set(x, y, c);
    }
  }
  return {std::move(out), std::move(coverage), std::move(mean), std::move(mesh)};
}

Raster morph_pair(const Raster& a, const LandmarkSet& la, const Raster& b, const LandmarkSet& lb,
                  const MorphConfig& cfg) {
  return morph_pair_detailed(a, la, b, lb, cfg).raster;
}

std::filesystem::path resolve_image(const std::filesystem::path& root, const std::string& sample) {
  const std::filesystem::path direct = root / sample;
  if (std::filesystem::is_regular_file(direct)) return direct;
  for (const char* ext : {".png", ".jpg", ".jpeg"}) {
    std::filesystem::path candidate = root / (sample + ext);
    if (std::filesystem::is_regular_file(candidate)) return candidate;
  }
  throw Error(ErrorKind::Io, "no image for sample '" + sample + "' under " + root.string());
}

SampleSource directory_source(std::filesystem::path image_root,
                              std::filesystem::path landmark_root) {
  SampleSource source;
  source.image_path = [image_root](const std::string& sample) {
    return resolve_image(image_root, sample);
  };
  source.landmarks = [landmark_root](const std::string& sample, const std::filesystem::path&) {
    std::filesystem::path rel(sample);
    if (has_image_extension(rel)) {
      rel.replace_extension(".txt");
    } else {
      rel += ".txt";
    }
    return load_landmarks(landmark_root / rel);
  };
  return source;
}

std::vector<std::string> morph_output_names(const PairProtocol& protocol,
                                            const std::string& tool_name) {
  std::map<std::pair<std::string, std::string>, int> seen;
  std::vector<std::string> names;
  names.reserve(protocol.size());
  for (const PairRow& row : protocol.rows) {
    const int n = ++seen[{row.subject_a, row.subject_b}];
    std::string name = tool_name + "_" + row.subject_a + "_" + row.subject_b;
    if (n > 1) name += "_" + std::to_string(n);
    names.push_back(name + ".png");
  }
  return names;
}

std::vector<ManifestEntry> run_pairs(const PairProtocol& protocol,
                                     const std::filesystem::path& output_dir,
                                     const std::string& tool_name, unsigned workers,
                                     const PairMorpher& morph_one) {
  const std::vector<std::string> names = morph_output_names(protocol, tool_name);
  std::vector<ManifestEntry> entries(protocol.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].index = i;
    entries[i].subject_a = protocol.rows[i].subject_a;
    entries[i].subject_b = protocol.rows[i].subject_b;
    entries[i].output_path = output_dir / names[i];
  }
  if (entries.empty()) return entries;
  std::filesystem::create_directories(output_dir);

  parallel_for(entries.size(), workers, [&](unsigned worker, std::size_t i) {
    try {
      morph_one(worker, i, entries[i].output_path);
    } catch (const std::exception& e) {
      entries[i].status = MorphStatus::Failed;
      entries[i].message = e.what();
    }
  });
  return entries;
}

std::vector<ManifestEntry> generate_set(const PairProtocol& protocol, const MorphConfig& cfg,
                                        const SampleSource& source,
                                        const std::filesystem::path& output_dir,
                                        unsigned workers) {
  cfg.validate();
  return run_pairs(protocol, output_dir, cfg.tool_name, workers,
                   [&](unsigned, std::size_t i, const std::filesystem::path& output) {
                     const PairRow& row = protocol.rows[i];
                     const auto path_a = source.image_path(row.sample_a);
                     const auto path_b = source.image_path(row.sample_b);
                     const Raster a = load_image(path_a);
                     const Raster b = load_image(path_b);
                     const LandmarkSet la = source.landmarks(row.sample_a, path_a);
                     const LandmarkSet lb = source.landmarks(row.sample_b, path_b);
                     save_image(morph_pair(a, la, b, lb, cfg), output);
                   });
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out = "index,subject_a,subject_b,status,output_path\n";
  for (const ManifestEntry& e : entries) {
    out += csv::join({std::to_string(e.index), e.subject_a, e.subject_b,
                      e.status == MorphStatus::Ok ? "ok" : "failed", e.output_path.string()});
    out += '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write manifest " + path.string());
  out << format_manifest(entries);
}

}  // namespace morphkit
