#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace strokeid::pixelio {

inline constexpr int kLineHeight = 64;
inline constexpr int kStrokePartSide = 32;
inline constexpr int kReceptiveFieldSide = 8;

// Row-major luminance raster, values on the [0, 255] scale.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, float fill = 0.0f);
  GrayImage(int width, int height, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const float* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  // Copy of the w x h rectangle at (x, y); the rectangle must lie inside.
  GrayImage crop(int x, int y, int w, int h) const;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

struct Patch {
  int side = 0;
  std::vector<float> values;  // side * side, row-major
};

// Decodes a PNG or JPEG file. Color is mapped to 0.299R + 0.587G + 0.114B.
GrayImage load_image(const std::filesystem::path& path);
GrayImage decode_image(std::span<const std::uint8_t> bytes, const std::string& name);

// Rounds and clamps to 8 bits and writes a grayscale PNG.
void save_png(const GrayImage& img, const std::filesystem::path& path);

GrayImage resize_bilinear(const GrayImage& img, int width, int height);

// Height becomes `target`, aspect ratio kept. Lines narrower than one
// stroke-part are right-padded by repeating their last column.
GrayImage resize_to_height(const GrayImage& img, int target = kLineHeight);

// Number of stroke-parts extract_strokeparts yields for a 64-px line.
std::size_t strokepart_count(int width, int step);

// 32x32 windows at x = 0, step, 2*step, ... and y = 0, 32, ordered with y
// outer and x inner.
std::vector<Patch> extract_strokeparts(const GrayImage& img, int step);

// `count` side x side patches drawn uniformly over all (image, x, y)
// placements. Reproducible for a given seed.
std::vector<Patch> sample_random_subpatches(std::span<const GrayImage> images, std::size_t count,
                                            int side, std::uint64_t seed);

}  // namespace strokeid::pixelio
