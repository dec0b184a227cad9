#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vomix/key_value.hpp"
#include "vomix/tensor.hpp"

namespace vomix {

/// 8-bit interleaved RGB.
struct RgbImage {
  Index width = 0;
  Index height = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(Index w, Index h) : width(w), height(h), rgb(static_cast<std::size_t>(w * h * 3), 0) {}

  std::uint8_t* pixel(Index x, Index y) { return rgb.data() + 3 * (y * width + x); }
  const std::uint8_t* pixel(Index x, Index y) const { return rgb.data() + 3 * (y * width + x); }
};

/// Binary PPM (P6, maxval 255). Header comments are accepted on read.
std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes);
void write_ppm(const RgbImage& img, const std::string& path);
RgbImage read_ppm(const std::string& path);

/// Nearest-neighbour integer upscale.
RgbImage upscale(const RgbImage& img, Index factor);

/// Channel-major float image (C x H x W).
struct ImageTensor {
  Index channels = 0;
  Index height = 0;
  Index width = 0;
  std::vector<float> data;

  float at(Index c, Index y, Index x) const { return data[static_cast<std::size_t>((c * height + y) * width + x)]; }
  float& at(Index c, Index y, Index x) { return data[static_cast<std::size_t>((c * height + y) * width + x)]; }
};

ImageTensor to_tensor(const RgbImage& img, const Normalization& norm);

/// Seeded uniform [-1, 1) image, for benchmarks and tests without input files.
ImageTensor synthetic_image(Index channels, Index size, std::uint64_t seed);

}  // namespace vomix
