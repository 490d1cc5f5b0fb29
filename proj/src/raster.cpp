#include "morphkit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "morphkit/error.hpp"

namespace morphkit {

namespace {

std::size_t sample_count(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::Dimension, "raster dimensions must be positive, got " +
                                          std::to_string(width) + "x" +
                                          std::to_string(height));
  }
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
         Raster::kChannels;
}

Raster from_bytes(int width, int height, const unsigned char* rgb) {
  std::vector<float> data(sample_count(width, height));
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(rgb[i]) / 255.0f;
  }
  return Raster(width, height, std::move(data));
}

Raster load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    throw Error(ErrorKind::Format,
                "cannot decode PNG " + path.string() + ": " + image.message);
  }
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw Error(ErrorKind::Dimension, "zero-dimension image " + path.string());
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
    std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Format, "cannot decode PNG " + path.string() + ": " + message);
  }
  return from_bytes(static_cast<int>(image.width), static_cast<int>(image.height),
                    buffer.data());
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

Raster load_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorKind::Io, "cannot open " + path.string());

  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;

  // Declared before setjmp so the jump back never crosses their construction.
  std::vector<unsigned char> pixels;
  int width = 0;
  int height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorKind::Format,
                "cannot decode JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  if (width > 0 && height > 0) {
    const std::size_t stride = static_cast<std::size_t>(width) * 3;
    pixels.resize(stride * static_cast<std::size_t>(height));
    while (cinfo.output_scanline < cinfo.output_height) {
      JSAMPROW row = pixels.data() + stride * cinfo.output_scanline;
      jpeg_read_scanlines(&cinfo, &row, 1);
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::Dimension, "zero-dimension image " + path.string());
  }
  return from_bytes(width, height, pixels.data());
}

}  // namespace

Raster::Raster(int width, int height)
    : width_(width), height_(height), data_(sample_count(width, height), 0.0f) {}

Raster::Raster(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != sample_count(width, height)) {
    throw Error(ErrorKind::Dimension, "raster data length " + std::to_string(data_.size()) +
                                          " does not match " + std::to_string(width) + "x" +
                                          std::to_string(height) + "x3");
  }
  for (float& v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Validation, "non-finite raster sample");
    v = std::clamp(v, 0.0f, 1.0f);
  }
}

void Raster::set(int x, int y, const Color& c) {
  const std::size_t i = index(x, y);
  for (int k = 0; k < kChannels; ++k) {
    if (!std::isfinite(c[k])) throw Error(ErrorKind::Validation, "non-finite raster sample");
    data_[i + k] = std::clamp(c[k], 0.0f, 1.0f);
  }
}

Raster load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open image " + path.string());
  unsigned char signature[8] = {};
  in.read(reinterpret_cast<char*>(signature), sizeof signature);
  const auto got = in.gcount();
  in.close();

  static constexpr unsigned char kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (got == 8 && std::equal(std::begin(kPng), std::end(kPng), signature)) {
    return load_png(path);
  }
  if (got >= 3 && signature[0] == 0xff && signature[1] == 0xd8 && signature[2] == 0xff) {
    return load_jpeg(path);
  }
  throw Error(ErrorKind::Format, "unsupported image format: " + path.string());
}

unsigned char quantize_sample(float v) noexcept {
  const float clamped = std::clamp(std::isfinite(v) ? v : 0.0f, 0.0f, 1.0f);
  return static_cast<unsigned char>(std::round(static_cast<double>(clamped) * 255.0));
}

Raster quantized(const Raster& raster) {
  std::vector<float> data(raster.data().begin(), raster.data().end());
  for (float& v : data) v = static_cast<float>(quantize_sample(v)) / 255.0f;
  return Raster(raster.width(), raster.height(), std::move(data));
}

void save_image(const Raster& raster, const std::filesystem::path& path) {
  if (raster.empty()) throw Error(ErrorKind::Dimension, "cannot save an empty raster");
  std::vector<unsigned char> bytes(raster.data().size());
  std::transform(raster.data().begin(), raster.data().end(), bytes.begin(), quantize_sample);

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width());
  image.height = static_cast<png_uint_32>(raster.height());
  image.format = PNG_FORMAT_RGB;
  if (png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr) == 0) {
    std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Io, "cannot write PNG " + path.string() + ": " + message);
  }
}

Color sample_bilinear(const Raster& raster, double x, double y) noexcept {
  const double max_x = raster.width() - 1;
  const double max_y = raster.height() - 1;
  x = std::isnan(x) ? 0.0 : std::clamp(x, 0.0, max_x);
  y = std::isnan(y) ? 0.0 : std::clamp(y, 0.0, max_y);

  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, raster.width() - 1);
  const int y1 = std::min(y0 + 1, raster.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;

  Color out{};
  for (int c = 0; c < Raster::kChannels; ++c) {
    const double top = (1.0 - fx) * raster.at(x0, y0, c) + fx * raster.at(x1, y0, c);
    const double bottom = (1.0 - fx) * raster.at(x0, y1, c) + fx * raster.at(x1, y1, c);
    out[c] = static_cast<float>((1.0 - fy) * top + fy * bottom);
  }
  return out;
}

Raster blend(const Raster& a, const Raster& b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::Precondition, "blend alpha must lie in [0,1]");
  }
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::Dimension, "blend operands differ in size");
  }
  const double beta = 1.0 - alpha;
  std::vector<float> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(alpha * a.data()[i] + beta * b.data()[i]);
  }
  return Raster(a.width(), a.height(), std::move(out));
}

}  // namespace morphkit
