#include "morphkit/latent.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "morphkit/adapter.hpp"
#include "morphkit/error.hpp"
#include "morphkit/hashing.hpp"

namespace morphkit {

void LatentVector::validate() const {
  if (values.empty()) throw Error(ErrorKind::Validation, "latent vector is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorKind::Validation, "latent component " + std::to_string(i) + " is not finite");
    }
  }
}

LatentVector lerp_latent(const LatentVector& wa, const LatentVector& wb, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::Precondition, "latent weight must lie in [0,1]");
  }
  if (wa.space != wb.space) {
    throw Error(ErrorKind::Validation,
                "latent spaces differ: '" + wa.space + "' vs '" + wb.space + "'");
  }
  if (wa.dimension() != wb.dimension()) {
    throw Error(ErrorKind::Dimension, "latent dimensions differ: " + std::to_string(wa.dimension()) +
                                          " vs " + std::to_string(wb.dimension()));
  }
  const double beta = 1.0 - alpha;
  LatentVector out{std::vector<double>(wa.dimension()), wa.space};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = alpha * wa.values[i] + beta * wb.values[i];
  }
  return out;
}

LatentVector latent_from_json(const nlohmann::json& payload) {
  const auto latent = payload.find("latent");
  if (latent == payload.end() || !latent->is_array()) {
    throw Error(ErrorKind::Validation, "response has no \"latent\" array");
  }
  LatentVector w;
  w.values.reserve(latent->size());
  for (const auto& v : *latent) {
    if (!v.is_number()) {
      // JSON has no NaN literal; adapters that emit one as null or a string
      // land here too.
      throw Error(ErrorKind::Validation, "latent component is not a finite number");
    }
    w.values.push_back(v.get<double>());
  }
  if (const auto space = payload.find("space"); space != payload.end()) {
    if (!space->is_string()) throw Error(ErrorKind::Validation, "latent \"space\" is not a string");
    w.space = space->get<std::string>();
  }
  w.validate();
  return w;
}

LatentVector LatentClient::project(const std::filesystem::path& image, int steps) {
  std::optional<std::filesystem::path> cache_file;
  if (cache_dir_) {
    cache_file = *cache_dir_ / (sha256_file(image) + ".latent.json");
    std::ifstream in(*cache_file, std::ios::binary);
    if (in) {
      std::string line;
      std::getline(in, line);
      try {
        LatentVector w = latent_from_json(nlohmann::json::parse(line));
        ++cache_hits_;
        return w;
      } catch (const std::exception&) {
        // Unreadable cache entries are recomputed and overwritten.
      }
    }
  }

  nlohmann::json request{{"op", "project"}, {"image", image.string()}, {"steps", steps}};
  if (seed_) request["seed"] = *seed_;
  LatentVector w;
  try {
    w = latent_from_json(adapter_.request(request));
  } catch (const Error& e) {
    throw Error(e.kind(), "projecting " + image.string() + ": " + e.what());
  }
  if (cache_file) {
    std::filesystem::create_directories(cache_file->parent_path());
    std::ofstream out(*cache_file, std::ios::binary);
    out << adapter_.last_response_line() << '\n';
  }
  return w;
}

Raster LatentClient::synthesize(const LatentVector& w, const std::filesystem::path& out,
                                std::optional<int> expected_size) {
  w.validate();
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  nlohmann::json response;
  try {
    response = adapter_.request(
        {{"op", "synthesize"}, {"latent", w.values}, {"space", w.space}, {"out", out.string()}});
  } catch (const Error& e) {
    throw Error(e.kind(), "synthesizing " + out.string() + ": " + e.what());
  }
  const auto ok = response.find("ok");
  if (ok == response.end() || !ok->is_boolean() || !ok->get<bool>()) {
    throw Error(ErrorKind::Adapter, "synthesize response for " + out.string() + " is not ok");
  }
  const auto width = response.find("width");
  const auto height = response.find("height");
  if (width == response.end() || height == response.end() || !width->is_number_integer() ||
      !height->is_number_integer()) {
    throw Error(ErrorKind::Validation, "synthesize response must declare integer width and height");
  }
  Raster raster = load_image(out);
  const int declared_w = width->get<int>();
  const int declared_h = height->get<int>();
  if (raster.width() != declared_w || raster.height() != declared_h) {
    throw Error(ErrorKind::Dimension, out.string() + " is " + std::to_string(raster.width()) + "x" +
                                          std::to_string(raster.height()) + " but the adapter declared " +
                                          std::to_string(declared_w) + "x" + std::to_string(declared_h));
  }
  if (expected_size && (declared_w != *expected_size || declared_h != *expected_size)) {
    throw Error(ErrorKind::Dimension, out.string() + " is " + std::to_string(declared_w) + "x" +
                                          std::to_string(declared_h) + ", expected " +
                                          std::to_string(*expected_size) + "x" +
                                          std::to_string(*expected_size));
  }
  return raster;
}

std::vector<Raster> LatentClient::synthesize_batch(std::span<const LatentVector> latents,
                                                   std::span<const std::filesystem::path> outputs,
                                                   std::optional<int> expected_size) {
  if (latents.size() != outputs.size()) {
    throw Error(ErrorKind::Precondition, "synthesize batch needs one output path per latent");
  }
  std::vector<Raster> rasters;
  rasters.reserve(latents.size());
  for (std::size_t i = 0; i < latents.size(); ++i) {
    rasters.push_back(synthesize(latents[i], outputs[i], expected_size));
  }
  return rasters;
}

}  // namespace morphkit
