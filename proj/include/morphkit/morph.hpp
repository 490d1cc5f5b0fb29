#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "morphkit/geometry.hpp"
#include "morphkit/landmarks.hpp"
#include "morphkit/raster.hpp"
#include "morphkit/triangulation.hpp"

namespace morphkit {

struct PairProtocol;

struct MorphConfig {
  /// Pixel blend weight of the first face.
  double alpha = 0.5;
  /// Weight of the first face's geometry; defaults to alpha.
  std::optional<double> geometry_alpha;
  /// Adds frame corners and edge midpoints to both landmark sets so the mesh
  /// covers the whole image.
  bool border_augmentation = false;
  /// Prefix of output file names, e.g. "opencv".
  std::string tool_name = "opencv";

  double shape_weight() const noexcept { return geometry_alpha.value_or(alpha); }
  void validate() const;
};

/// Map from destination coordinates back to source coordinates: applying it
/// to dst[i] gives src[i]. Throws Degenerate if either triangle has no area.
Affine2 affine_from_triangles(const Triangle2& src, const Triangle2& dst);

struct WarpResult {
  Raster raster;
  /// One entry per pixel, row-major; 1 where the pixel center lies inside
  /// the mesh over the destination landmarks.
  std::vector<unsigned char> coverage;
  std::size_t covered_pixels = 0;
};

/// Inverse piecewise-affine warp of `src` from `src_lm` geometry onto
/// `dst_lm` geometry. `mesh` triangulates dst_lm; pixels are assigned to the
/// lowest-index triangle containing them. Uncovered pixels are left at 0.
WarpResult warp_piecewise(const Raster& src, const LandmarkSet& src_lm,
                          const LandmarkSet& dst_lm, const TriangleMesh& mesh);

struct MorphResult {
  Raster raster;
  std::vector<unsigned char> coverage;
  LandmarkSet landmarks;
  TriangleMesh mesh;
};

/// Landmark-based morph: average the geometry, triangulate it, warp both
/// faces onto it and blend. Pixels outside the mesh are the plain blend of
/// the unwarped sources.
MorphResult morph_pair_detailed(const Raster& a, const LandmarkSet& la, const Raster& b,
                                const LandmarkSet& lb, const MorphConfig& cfg);

Raster morph_pair(const Raster& a, const LandmarkSet& la, const Raster& b,
                  const LandmarkSet& lb, const MorphConfig& cfg);

enum class MorphStatus { Ok, Failed };

struct ManifestEntry {
  std::size_t index = 0;
  std::string subject_a;
  std::string subject_b;
  MorphStatus status = MorphStatus::Ok;
  std::filesystem::path output_path;
  std::string message;
};

/// Locates the image and landmarks of one protocol sample.
struct SampleSource {
  std::function<std::filesystem::path(const std::string& sample)> image_path;
  std::function<LandmarkSet(const std::string& sample, const std::filesystem::path& image)>
      landmarks;
};

/// Default lookup: image_root/<sample>[.png|.jpg|.jpeg] and
/// landmark_root/<sample stem>.txt.
SampleSource directory_source(std::filesystem::path image_root,
                              std::filesystem::path landmark_root);

/// Resolves a sample id against a directory, trying the id as given and then
/// with .png, .jpg and .jpeg appended.
std::filesystem::path resolve_image(const std::filesystem::path& root, const std::string& sample);

/// "<tool>_<subject_a>_<subject_b>.png"; repeated subject pairs get "_2",
/// "_3", ... before the extension in protocol order.
std::vector<std::string> morph_output_names(const PairProtocol& protocol,
                                            const std::string& tool_name);

/// Produces the morph for protocol row `index` at `output`. `worker` is the
/// index of the calling worker thread, for per-worker resources.
using PairMorpher = std::function<void(unsigned worker, std::size_t index,
                                       const std::filesystem::path& output)>;

/// Runs `morph_one` for every protocol row across `workers` threads and
/// returns entries in protocol order. A throwing row is recorded as Failed
/// and the run continues.
std::vector<ManifestEntry> run_pairs(const PairProtocol& protocol,
                                     const std::filesystem::path& output_dir,
                                     const std::string& tool_name, unsigned workers,
                                     const PairMorpher& morph_one);

/// Landmark-based generation over a pair protocol.
std::vector<ManifestEntry> generate_set(const PairProtocol& protocol, const MorphConfig& cfg,
                                        const SampleSource& source,
                                        const std::filesystem::path& output_dir,
                                        unsigned workers = 1);

/// CSV with header "index,subject_a,subject_b,status,output_path".
std::string format_manifest(const std::vector<ManifestEntry>& entries);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

}  // namespace morphkit
