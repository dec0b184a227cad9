#include "vomix/image.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "vomix/rng.hpp"

namespace vomix {
namespace {

class HeaderParser {
 public:
  explicit HeaderParser(const std::vector<std::uint8_t>& b) : b_(b) {}

  Index next_int() {
    skip_space_and_comments();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw ConfigError("malformed PPM header");
    Index v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > (Index{1} << 24)) throw ConfigError("PPM dimension too large");
    }
    return v;
  }
  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw ConfigError("not a binary PPM (P6) image");
  }
  HeaderParser p(bytes);
  p.advance(2);
  const Index w = p.next_int();
  const Index h = p.next_int();
  const Index maxval = p.next_int();
  if (maxval != 255) throw ConfigError("only 8-bit PPM (maxval 255) is supported");
  p.advance(1);  // single whitespace before the raster
  RgbImage img(w, h);
  if (bytes.size() < p.pos() + img.rgb.size()) throw ConfigError("truncated PPM raster");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(p.pos()), img.rgb.size(), img.rgb.begin());
  return img;
}

void write_ppm(const RgbImage& img, const std::string& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open image '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

RgbImage upscale(const RgbImage& img, Index factor) {
  if (factor < 1) throw ConfigError("upscale factor must be >= 1");
  RgbImage out(img.width * factor, img.height * factor);
  for (Index y = 0; y < out.height; ++y)
    for (Index x = 0; x < out.width; ++x)
      std::copy_n(img.pixel(x / factor, y / factor), 3, out.pixel(x, y));
  return out;
}

ImageTensor to_tensor(const RgbImage& img, const Normalization& norm) {
  ImageTensor t{3, img.height, img.width, {}};
  t.data.resize(static_cast<std::size_t>(3 * img.height * img.width));
  for (Index c = 0; c < 3; ++c)
    for (Index y = 0; y < img.height; ++y)
      for (Index x = 0; x < img.width; ++x)
        t.at(c, y, x) = (static_cast<float>(img.pixel(x, y)[c]) / 255.0f - norm.mean[c]) / norm.std[c];
  return t;
}

ImageTensor synthetic_image(Index channels, Index size, std::uint64_t seed) {
  SplitMix64 rng(seed);
  ImageTensor t{channels, size, size, {}};
  t.data.resize(static_cast<std::size_t>(channels * size * size));
  for (float& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

}  // namespace vomix
