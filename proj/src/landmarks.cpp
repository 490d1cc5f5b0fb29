#include "morphkit/landmarks.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "morphkit/adapter.hpp"
#include "morphkit/error.hpp"

namespace morphkit {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\f\v");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) tokens.push_back(s.substr(start, i - start));
  }
  return tokens;
}

double parse_double(std::string_view token, std::size_t line_no) {
  double value = 0.0;
  // from_chars rejects a leading '+', which is harmless in annotation files.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorKind::Format, "line " + std::to_string(line_no) +
                                       ": non-numeric token '" + std::string(token) + "'");
  }
  return value;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

LandmarkScheme scheme_for_count(std::size_t count) noexcept {
  if (count == 68) return LandmarkScheme::P68;
  if (count == 189) return LandmarkScheme::P189;
  return LandmarkScheme::Custom;
}

const char* to_string(LandmarkScheme scheme) {
  switch (scheme) {
    case LandmarkScheme::P68: return "P68";
    case LandmarkScheme::P189: return "P189";
    case LandmarkScheme::Custom: return "CUSTOM";
  }
  return "?";
}

LandmarkSet::LandmarkSet(std::vector<Point2> points, int image_width, int image_height)
    : points_(std::move(points)),
      scheme_(scheme_for_count(points_.size())),
      image_width_(image_width),
      image_height_(image_height) {
  if (points_.size() < 3) {
    throw Error(ErrorKind::Validation,
                "a landmark set needs at least 3 points, got " + std::to_string(points_.size()));
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
      throw Error(ErrorKind::Validation, "landmark " + std::to_string(i) + " is not finite");
    }
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if (std::hypot(points_[i].x - points_[j].x, points_[i].y - points_[j].y) <=
          kCoincidentTolerance) {
        throw Error(ErrorKind::Validation, "landmarks " + std::to_string(i) + " and " +
                                               std::to_string(j) + " coincide");
      }
    }
  }
}

LandmarkSet parse_points_text(std::string_view content) {
  std::optional<std::size_t> expected;
  std::vector<Point2> points;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = trim(content.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto tokens = split_ws(line);
    if (!expected) {
      if (tokens.size() != 1) {
        throw Error(ErrorKind::Format,
                    "line " + std::to_string(line_no) + ": expected the point count");
      }
      long long n = 0;
      const auto [ptr, ec] =
          std::from_chars(tokens[0].data(), tokens[0].data() + tokens[0].size(), n);
      if (ec != std::errc() || ptr != tokens[0].data() + tokens[0].size()) {
        throw Error(ErrorKind::Format, "line " + std::to_string(line_no) +
                                           ": point count is not an integer");
      }
      if (n < 3) {
        throw Error(ErrorKind::Format, "point count must be at least 3, got " + std::to_string(n));
      }
      expected = static_cast<std::size_t>(n);
      points.reserve(*expected);
      continue;
    }
    if (tokens.size() != 2) {
      throw Error(ErrorKind::Format,
                  "line " + std::to_string(line_no) + ": expected two coordinates");
    }
    if (points.size() == *expected) {
      throw Error(ErrorKind::Format, "count mismatch: more than the declared " +
                                         std::to_string(*expected) + " points");
    }
    points.push_back({parse_double(tokens[0], line_no), parse_double(tokens[1], line_no)});
  }
  if (!expected) throw Error(ErrorKind::Format, "missing point count");
  if (points.size() != *expected) {
    throw Error(ErrorKind::Format, "count mismatch: declared " + std::to_string(*expected) +
                                       " points, found " + std::to_string(points.size()));
  }
  return LandmarkSet(std::move(points));
}

std::string format_points_text(const LandmarkSet& landmarks) {
  std::string out = std::to_string(landmarks.size()) + "\n";
  for (const Point2& p : landmarks.points()) {
    out += shortest(p.x);
    out += ' ';
    out += shortest(p.y);
    out += '\n';
  }
  return out;
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open landmark file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_points_text(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

LandmarkSet detect_landmarks_external(const std::filesystem::path& image_path,
                                      AdapterProcess& adapter,
                                      std::optional<std::size_t> expected_count) {
  const nlohmann::json response =
      adapter.request({{"op", "landmarks"}, {"image", image_path.string()}});
  const auto it = response.find("points");
  if (it == response.end() || !it->is_array()) {
    throw Error(ErrorKind::Validation, "detector response for " + image_path.string() +
                                           " has no \"points\" array");
  }
  std::vector<Point2> points;
  points.reserve(it->size());
  for (const auto& entry : *it) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
        !entry[1].is_number()) {
      throw Error(ErrorKind::Validation, "detector response for " + image_path.string() +
                                             " contains a malformed point");
    }
    points.push_back({entry[0].get<double>(), entry[1].get<double>()});
  }
  if (expected_count && points.size() != *expected_count) {
    throw Error(ErrorKind::Validation, "detector returned " + std::to_string(points.size()) +
                                           " points for " + image_path.string() +
                                           ", expected " + std::to_string(*expected_count));
  }
  try {
    return LandmarkSet(std::move(points));
  } catch (const Error& e) {
    throw Error(ErrorKind::Validation, image_path.string() + ": " + e.what());
  }
}

LandmarkSet weighted_mean_landmarks(const LandmarkSet& la, const LandmarkSet& lb, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::Precondition, "landmark weight must lie in [0,1]");
  }
  if (la.size() != lb.size() || la.scheme() != lb.scheme()) {
    throw Error(ErrorKind::Validation, "landmark sets differ in scheme or count (" +
                                           std::to_string(la.size()) + " vs " +
                                           std::to_string(lb.size()) + ")");
  }
  const double beta = 1.0 - alpha;
  std::vector<Point2> out(la.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {alpha * la[i].x + beta * lb[i].x, alpha * la[i].y + beta * lb[i].y};
  }
  return LandmarkSet(std::move(out), la.image_width(), la.image_height());
}

std::vector<Point2> border_points(int width, int height) {
  const double w = width - 1;
  const double h = height - 1;
  return {{0, 0}, {w, 0}, {w, h}, {0, h}, {w / 2, 0}, {w, h / 2}, {w / 2, h}, {0, h / 2}};
}

LandmarkSet with_border_points(const LandmarkSet& landmarks, int width, int height) {
  std::vector<Point2> points(landmarks.points().begin(), landmarks.points().end());
  for (const Point2& p : border_points(width, height)) points.push_back(p);
  return LandmarkSet(std::move(points), width, height);
}

Similarity2 Similarity2::inverse() const {
  const double det = a * a + b * b;
  if (det == 0.0) throw Error(ErrorKind::Degenerate, "similarity has zero scale");
  // Inverse of [a -b; b a] is [a b; -b a] / det.
  Similarity2 inv;
  inv.a = a / det;
  inv.b = -b / det;
  inv.tx = -(inv.a * tx - inv.b * ty);
  inv.ty = -(inv.b * tx + inv.a * ty);
  return inv;
}

double Similarity2::scale() const noexcept { return std::hypot(a, b); }

Similarity2 fit_similarity(std::span<const Point2> from, std::span<const Point2> to) {
  if (from.size() != to.size() || from.size() < 2) {
    throw Error(ErrorKind::Degenerate, "similarity fit needs at least 2 point pairs");
  }
  const double n = static_cast<double>(from.size());
  Point2 cf{};
  Point2 ct{};
  for (std::size_t i = 0; i < from.size(); ++i) {
    cf.x += from[i].x;
    cf.y += from[i].y;
    ct.x += to[i].x;
    ct.y += to[i].y;
  }
  cf = {cf.x / n, cf.y / n};
  ct = {ct.x / n, ct.y / n};

  double spread = 0.0;
  double dot = 0.0;
  double cross = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    const double px = from[i].x - cf.x;
    const double py = from[i].y - cf.y;
    const double qx = to[i].x - ct.x;
    const double qy = to[i].y - ct.y;
    spread += px * px + py * py;
    dot += px * qx + py * qy;
    cross += px * qy - py * qx;
  }
  if (spread <= kCoincidentTolerance * kCoincidentTolerance) {
    throw Error(ErrorKind::Degenerate, "alignment anchors coincide");
  }
  Similarity2 s;
  s.a = dot / spread;
  s.b = cross / spread;
  s.tx = ct.x - (s.a * cf.x - s.b * cf.y);
  s.ty = ct.y - (s.b * cf.x + s.a * cf.y);
  return s;
}

namespace {

void require_distinct(std::span<const Point2> points, const char* what) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (std::hypot(points[i].x - points[j].x, points[i].y - points[j].y) <=
          kCoincidentTolerance) {
        throw Error(ErrorKind::Degenerate, std::string(what) + " " + std::to_string(i) +
                                               " and " + std::to_string(j) + " coincide");
      }
    }
  }
}

}  // namespace

AlignedFace align_to_template(const Raster& raster, const LandmarkSet& landmarks,
                              const AlignmentTemplate& tpl) {
  if (tpl.output_width <= 0 || tpl.output_height <= 0) {
    throw Error(ErrorKind::Precondition, "alignment template output size must be positive");
  }
  if (tpl.anchor_indices.size() != tpl.targets.size() || tpl.anchor_indices.size() < 2) {
    throw Error(ErrorKind::Precondition,
                "alignment template needs at least 2 anchors with one target each");
  }
  std::vector<Point2> anchors;
  anchors.reserve(tpl.anchor_indices.size());
  for (std::size_t idx : tpl.anchor_indices) {
    if (idx >= landmarks.size()) {
      throw Error(ErrorKind::Precondition, "template anchor " + std::to_string(idx) +
                                               " is out of range for a " +
                                               std::to_string(landmarks.size()) + "-point set");
    }
    anchors.push_back(landmarks[idx]);
  }
  require_distinct(anchors, "alignment anchors");
  require_distinct(tpl.targets, "alignment targets");

  const Similarity2 forward = fit_similarity(anchors, tpl.targets);
  const Similarity2 backward = forward.inverse();

  Raster out(tpl.output_width, tpl.output_height);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const Point2 src = backward.apply({static_cast<double>(x), static_cast<double>(y)});
      out.set(x, y, sample_bilinear(raster, src.x, src.y));
    }
  }
  std::vector<Point2> moved;
  moved.reserve(landmarks.size());
  for (const Point2& p : landmarks.points()) moved.push_back(forward.apply(p));
  return {std::move(out), LandmarkSet(std::move(moved), tpl.output_width, tpl.output_height),
          forward};
}

}  // namespace morphkit
