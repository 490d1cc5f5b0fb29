#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "morphkit/raster.hpp"

namespace morphkit {

class AdapterProcess;

/// A point in a generator's latent space. The toolkit never interprets the
/// space; the tag only has to match between vectors that are combined.
struct LatentVector {
  std::vector<double> values;
  std::string space = "W";

  std::size_t dimension() const noexcept { return values.size(); }
  /// Throws Validation for an empty vector or a non-finite value.
  void validate() const;

  friend bool operator==(const LatentVector&, const LatentVector&) = default;
};

/// out_i = alpha*wa_i + (1-alpha)*wb_i.
LatentVector lerp_latent(const LatentVector& wa, const LatentVector& wb, double alpha);

/// Parses {"latent":[...],"space":"..."}.
LatentVector latent_from_json(const nlohmann::json& payload);

/// Default projection budget of the generator adapter.
inline constexpr int kDefaultProjectionSteps = 1000;

/// Client side of the generator adapter protocol:
///   {"op":"project","image":p,"steps":n}            -> {"latent":[...],"space":s}
///   {"op":"synthesize","latent":[...],"space":s,"out":p} -> {"ok":true,"width":w,"height":h}
class LatentClient {
 public:
  explicit LatentClient(AdapterProcess& adapter) : adapter_(adapter) {}

  /// Optional seed forwarded with every projection request.
  void set_seed(std::optional<long long> seed) { seed_ = seed; }

  /// Cache directory for projections, keyed by the image's SHA-256. Entries
  /// are "<hash>.latent.json" holding the adapter response verbatim.
  void set_cache_dir(std::optional<std::filesystem::path> dir) { cache_dir_ = std::move(dir); }

  LatentVector project(const std::filesystem::path& image, int steps = kDefaultProjectionSteps);

  /// Writes the synthesized image to `out` and loads it back. The file must
  /// match the size the adapter declares, and `expected_size` when given.
  Raster synthesize(const LatentVector& w, const std::filesystem::path& out,
                    std::optional<int> expected_size = std::nullopt);

  /// One synthesize call per vector, in order.
  std::vector<Raster> synthesize_batch(std::span<const LatentVector> latents,
                                       std::span<const std::filesystem::path> outputs,
                                       std::optional<int> expected_size = std::nullopt);

  std::size_t cache_hits() const noexcept { return cache_hits_; }

 private:
  AdapterProcess& adapter_;
  std::optional<long long> seed_;
  std::optional<std::filesystem::path> cache_dir_;
  std::size_t cache_hits_ = 0;
};

}  // namespace morphkit
