#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "morphkit/geometry.hpp"
#include "morphkit/raster.hpp"

namespace morphkit {

class AdapterProcess;

enum class LandmarkScheme { P68, P189, Custom };

/// Scheme implied by a point count: 68 and 189 are the two annotation
/// layouts in use, anything else is custom.
LandmarkScheme scheme_for_count(std::size_t count) noexcept;
const char* to_string(LandmarkScheme scheme);

/// Points closer than this (in pixels) are treated as coincident.
inline constexpr double kCoincidentTolerance = 1e-6;

/// Ordered facial landmarks for one image. Always valid once constructed:
/// at least 3 finite points, none coincident, scheme consistent with count.
class LandmarkSet {
 public:
  explicit LandmarkSet(std::vector<Point2> points, int image_width = 0, int image_height = 0);

  std::span<const Point2> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const Point2& operator[](std::size_t i) const noexcept { return points_[i]; }
  LandmarkScheme scheme() const noexcept { return scheme_; }
  int image_width() const noexcept { return image_width_; }
  int image_height() const noexcept { return image_height_; }

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

 private:
  std::vector<Point2> points_;
  LandmarkScheme scheme_;
  int image_width_;
  int image_height_;
};

/// Parses the landmark text format:
///
///   # optional comment lines
///   N
///   x0 y0
///   ...
///
/// Blank lines and lines starting with '#' are ignored anywhere.
LandmarkSet parse_points_text(std::string_view content);

/// Canonical text rendering accepted by parse_points_text. Coordinates use
/// the shortest representation that round-trips.
std::string format_points_text(const LandmarkSet& landmarks);

LandmarkSet load_landmarks(const std::filesystem::path& path);

/// Requests landmarks for one image from a detector adapter:
/// {"op":"landmarks","image":...} -> {"points":[[x,y],...]}.
/// `expected_count`, when set, is enforced on the response.
LandmarkSet detect_landmarks_external(const std::filesystem::path& image_path,
                                      AdapterProcess& adapter,
                                      std::optional<std::size_t> expected_count = std::nullopt);

/// point_i = alpha*la_i + (1-alpha)*lb_i.
LandmarkSet weighted_mean_landmarks(const LandmarkSet& la, const LandmarkSet& lb, double alpha);

/// Frame corners and edge midpoints of a width x height image, in that order.
std::vector<Point2> border_points(int width, int height);

/// Appends border_points to a landmark set.
LandmarkSet with_border_points(const LandmarkSet& landmarks, int width, int height);

struct AlignmentTemplate {
  std::vector<std::size_t> anchor_indices;
  std::vector<Point2> targets;
  int output_width = 0;
  int output_height = 0;
};

/// Similarity transform q = [a -b; b a] p + t.
struct Similarity2 {
  double a = 1.0;
  double b = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  Point2 apply(const Point2& p) const noexcept {
    return {a * p.x - b * p.y + tx, b * p.x + a * p.y + ty};
  }
  Similarity2 inverse() const;
  double scale() const noexcept;
};

/// Least-squares similarity taking `from` onto `to`. Throws Degenerate when
/// fewer than 2 points are given or all of them coincide.
Similarity2 fit_similarity(std::span<const Point2> from, std::span<const Point2> to);

struct AlignedFace {
  Raster raster;
  LandmarkSet landmarks;
  Similarity2 transform;
};

/// Fits the similarity that takes the template anchors of `landmarks` onto
/// the template targets and resamples the image into the template frame.
AlignedFace align_to_template(const Raster& raster, const LandmarkSet& landmarks,
                              const AlignmentTemplate& tpl);

}  // namespace morphkit
