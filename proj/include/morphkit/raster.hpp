#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace morphkit {

using Color = std::array<float, 3>;

/// RGB image with float samples in [0,1], row-major, interleaved.
///
/// Writes through set() clamp into [0,1]; non-finite values are rejected.
class Raster {
 public:
  static constexpr int kChannels = 3;

  Raster() = default;
  /// Zero-filled raster. Throws if either dimension is not positive.
  Raster(int width, int height);
  /// Takes ownership of `data`, which must hold width*height*3 finite samples.
  Raster(int width, int height, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }

  float at(int x, int y, int c) const noexcept {
    return data_[index(x, y) + static_cast<std::size_t>(c)];
  }
  Color pixel(int x, int y) const noexcept {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, const Color& c);

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
           kChannels;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Decodes PNG or JPEG (detected from the file signature). 8-bit channels
/// map to v/255; grayscale is expanded to RGB and alpha is dropped.
Raster load_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG, quantizing each sample with quantize_sample.
void save_image(const Raster& raster, const std::filesystem::path& path);

/// round(v*255) with halves rounded away from zero, after clamping to [0,1].
unsigned char quantize_sample(float v) noexcept;

/// Round-trips every sample through 8-bit quantization.
Raster quantized(const Raster& raster);

/// Bilinear sample at pixel coordinates, where (i, j) is the center of pixel
/// (i, j). Coordinates are clamped to [0,width-1] x [0,height-1].
Color sample_bilinear(const Raster& raster, double x, double y) noexcept;

/// Per sample alpha*a + (1-alpha)*b.
Raster blend(const Raster& a, const Raster& b, double alpha);

}  // namespace morphkit
