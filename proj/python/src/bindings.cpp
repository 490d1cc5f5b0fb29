#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "morphkit/error.hpp"
#include "morphkit/landmarks.hpp"
#include "morphkit/morph.hpp"
#include "morphkit/protocols.hpp"
#include "morphkit/raster.hpp"
#include "morphkit/run.hpp"
#include "morphkit/scoring.hpp"
#include "morphkit/triangulation.hpp"
#include "morphkit/vulnerability.hpp"

namespace py = pybind11;
using namespace morphkit;

namespace {

using FloatImage = py::array_t<float, py::array::c_style | py::array::forcecast>;

Raster to_raster(const FloatImage& img) {
  if (img.ndim() != 3 || img.shape(2) != 3) throw Error(ErrorKind::Dimension, "expected an HxWx3 array");
  const auto h = static_cast<int>(img.shape(0)), w = static_cast<int>(img.shape(1));
  std::vector<float> data(img.data(), img.data() + img.size());
  return Raster(w, h, std::move(data));
}

FloatImage to_array(const Raster& r) {
  FloatImage out({r.height(), r.width(), Raster::kChannels});
  std::copy(r.data().begin(), r.data().end(), out.mutable_data());
  return out;
}

LandmarkSet to_landmarks(const std::vector<std::pair<double, double>>& pts) {
  std::vector<Point2> p;
  p.reserve(pts.size());
  for (const auto& [x, y] : pts) p.push_back({x, y});
  return LandmarkSet(std::move(p));
}

std::vector<std::pair<double, double>> from_landmarks(const LandmarkSet& lm) {
  std::vector<std::pair<double, double>> out;
  for (const Point2& p : lm.points()) out.emplace_back(p.x, p.y);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Face morph generation and morphing-attack vulnerability evaluation";
  m.attr("__version__") = VERSION_INFO;

  static py::exception<Error> error_type(m, "MorphkitError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("load_image", [](const std::filesystem::path& p) { return to_array(load_image(p)); }, py::arg("path"),
        "Decode a PNG or JPEG into an HxWx3 float32 array in [0, 1].");
  m.def("save_image", [](const FloatImage& img, const std::filesystem::path& p) { save_image(to_raster(img), p); },
        py::arg("image"), py::arg("path"));

  m.def("parse_landmarks", [](const std::string& text) { return from_landmarks(parse_points_text(text)); },
        py::arg("text"));
  m.def("format_landmarks",
        [](const std::vector<std::pair<double, double>>& pts) { return format_points_text(to_landmarks(pts)); },
        py::arg("points"));

  m.def(
      "delaunay",
      [](const std::vector<std::pair<double, double>>& pts) {
        std::vector<Point2> p;
        for (const auto& [x, y] : pts) p.push_back({x, y});
        return delaunay(p).triangles;
      },
      py::arg("points"), "Delaunay triangles as index triples, counter-clockwise.");

  m.def(
      "morph_pair",
      [](const FloatImage& a, const std::vector<std::pair<double, double>>& la, const FloatImage& b,
         const std::vector<std::pair<double, double>>& lb, double alpha, std::optional<double> geometry_alpha,
         bool border_augmentation) {
        MorphConfig cfg;
        cfg.alpha = alpha;
        cfg.geometry_alpha = geometry_alpha;
        cfg.border_augmentation = border_augmentation;
        cfg.validate();
        return to_array(morph_pair(to_raster(a), to_landmarks(la), to_raster(b), to_landmarks(lb), cfg));
      },
      py::arg("a"), py::arg("landmarks_a"), py::arg("b"), py::arg("landmarks_b"), py::arg("alpha") = 0.5,
      py::arg("geometry_alpha") = py::none(), py::arg("border_augmentation") = false);

  m.def("cosine_score", [](const std::vector<double>& u, const std::vector<double>& v) { return cosine_score(u, v); },
        py::arg("u"), py::arg("v"));
  m.def("fmr", [](const std::vector<double>& s, double t) { return fmr(s, t); }, py::arg("zero_effort"),
        py::arg("threshold"));
  m.def("fnmr", [](const std::vector<double>& s, double t) { return fnmr(s, t); }, py::arg("genuine"),
        py::arg("threshold"));
  m.def("threshold_at_fmr", [](const std::vector<double>& s, double target) { return threshold_at_fmr(s, target); },
        py::arg("zero_effort"), py::arg("target") = 0.001);
  m.def(
      "mmpmr",
      [](const std::vector<std::pair<double, double>>& pairs, double t) {
        std::vector<MorphGroup> groups;
        for (const auto& [a, b] : pairs) groups.push_back({"", {SubjectScore{"a", a}, SubjectScore{"b", b}}});
        return mmpmr(groups, t);
      },
      py::arg("subject_scores"), py::arg("threshold"),
      "MMPMR from (score vs subject 1, score vs subject 2) pairs.");
  m.def("format_percent", &format_percent, py::arg("percent"));

  m.def(
      "count_trials",
      [](const std::string& manifest_csv) {
        const auto trials = enumerate_trials(parse_scenario_manifest(manifest_csv));
        py::dict out;
        for (const char* k : {"genuine", "zero_effort", "morph_attack"}) out[k] = 0;
        for (const Trial& t : trials) {
          const char* k = t.kind == TrialKind::Genuine      ? "genuine"
                          : t.kind == TrialKind::ZeroEffort ? "zero_effort"
                                                            : "morph_attack";
          out[k] = out[k].cast<int>() + 1;
        }
        return out;
      },
      py::arg("manifest_csv"));

  m.def(
      "run",
      [](const std::string& command, const std::filesystem::path& config,
         std::optional<std::filesystem::path> output_root) {
        RunConfig c = load_run_config(config);
        if (output_root) c.output_root = std::filesystem::absolute(*output_root);
        std::ostringstream out, err;
        CommandIo io{out, err, {"morphkit", command, "--config", config.string()}};
        const int code = run_command(command, c, io);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("output_root") = py::none(),
      "Run a CLI subcommand; returns (exit_code, stdout, stderr).");
}
