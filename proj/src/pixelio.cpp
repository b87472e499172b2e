#include "pixelio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace strokeid::pixelio {

GrayImage::GrayImage(int width, int height, float fill)
    : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
  require(width >= 1 && height >= 1, "image dimensions must be positive");
}

GrayImage::GrayImage(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  require(width >= 1 && height >= 1, "image dimensions must be positive");
  require(data_.size() == static_cast<std::size_t>(width) * height,
          "image data length does not match width x height");
}

GrayImage GrayImage::crop(int x, int y, int w, int h) const {
  require(x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= width_ && y + h <= height_,
          "crop rectangle outside image");
  GrayImage out(w, h);
  for (int r = 0; r < h; ++r) std::copy_n(row(y + r) + x, w, &out.at(0, r));
  return out;
}

namespace {

template <class T>
GrayImage to_gray(const cv::Mat& m, double scale) {
  GrayImage out(m.cols, m.rows);
  const int ch = m.channels();
  for (int y = 0; y < m.rows; ++y) {
    const T* p = m.ptr<T>(y);
    for (int x = 0; x < m.cols; ++x) {
      const T* px = p + static_cast<std::ptrdiff_t>(x) * ch;
      double v;
      if (ch >= 3) {
        // OpenCV stores color as BGR(A).
        v = 0.299 * px[2] + 0.587 * px[1] + 0.114 * px[0];
      } else {
        v = px[0];
      }
      out.at(x, y) = static_cast<float>(std::clamp(v * scale, 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace

GrayImage decode_image(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (bytes.empty()) fail(ErrorKind::Decode, "cannot decode image '" + name + "': empty file");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat m;
  try {
    m = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::Decode, "cannot decode image '" + name + "': " + e.what());
  }
  if (m.empty()) fail(ErrorKind::Decode, "cannot decode image '" + name + "'");
  switch (m.depth()) {
    case CV_8U:
      return to_gray<std::uint8_t>(m, 1.0);
    case CV_16U:
      return to_gray<std::uint16_t>(m, 255.0 / 65535.0);
    default:
      fail(ErrorKind::Decode, "unsupported pixel depth in '" + name + "'");
  }
}

GrayImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Decode, "cannot read image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_image(bytes, path.string());
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
  cv::Mat m(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y) {
    auto* p = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width(); ++x)
      p[x] = static_cast<std::uint8_t>(std::clamp(std::lround(img.at(x, y)), 0L, 255L));
  }
  std::vector<std::uint8_t> encoded;
  if (!cv::imencode(".png", m, encoded, {cv::IMWRITE_PNG_COMPRESSION, 6}))
    fail(ErrorKind::Io, "cannot encode PNG for '" + path.string() + "'");
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(encoded.data()), static_cast<std::streamsize>(encoded.size()));
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
}

namespace {

struct Tap {
  int lo, hi;
  float frac;
};

// Half-pixel-centre sample positions; identity when the sizes agree.
std::vector<Tap> taps(int src, int dst) {
  std::vector<Tap> t(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
    int lo = static_cast<int>(std::floor(s));
    int hi = std::min(lo + 1, src - 1);
    t[i] = {lo, hi, static_cast<float>(s - lo)};
  }
  return t;
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, int width, int height) {
  require(!img.empty(), "resize of empty image");
  require(width >= 1 && height >= 1, "resize target must be positive");
  if (width == img.width() && height == img.height()) return img;
  const auto tx = taps(img.width(), width);
  const auto ty = taps(img.height(), height);
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const float* r0 = img.row(ty[y].lo);
    const float* r1 = img.row(ty[y].hi);
    const float fy = ty[y].frac;
    for (int x = 0; x < width; ++x) {
      const auto& t = tx[x];
      float top = r0[t.lo] + (r0[t.hi] - r0[t.lo]) * t.frac;
      float bot = r1[t.lo] + (r1[t.hi] - r1[t.lo]) * t.frac;
      out.at(x, y) = std::clamp(top + (bot - top) * fy, 0.0f, 255.0f);
    }
  }
  return out;
}

GrayImage resize_to_height(const GrayImage& img, int target) {
  require(!img.empty(), "resize of empty image");
  require(target >= 1, "target height must be positive");
  const long scaled = std::lround(static_cast<double>(img.width()) * target / img.height());
  const int width = static_cast<int>(std::max(1L, scaled));
  GrayImage resized = resize_bilinear(img, width, target);
  if (width >= kStrokePartSide) return resized;
  GrayImage padded(kStrokePartSide, target);
  for (int y = 0; y < target; ++y) {
    for (int x = 0; x < kStrokePartSide; ++x) padded.at(x, y) = resized.at(std::min(x, width - 1), y);
  }
  return padded;
}

std::size_t strokepart_count(int width, int step) {
  if (width < kStrokePartSide || step < 1) return 0;
  return 2 * (static_cast<std::size_t>((width - kStrokePartSide) / step) + 1);
}

std::vector<Patch> extract_strokeparts(const GrayImage& img, int step) {
  require(step >= 1, "sliding-window step must be positive");
  require(img.height() == kLineHeight, "stroke-part extraction needs a 64-px line");
  require(img.width() >= kStrokePartSide, "line narrower than 32 px; resize_to_height pads it");
  std::vector<Patch> parts;
  parts.reserve(strokepart_count(img.width(), step));
  for (int y0 = 0; y0 + kStrokePartSide <= img.height(); y0 += kStrokePartSide) {
    for (int x0 = 0; x0 + kStrokePartSide <= img.width(); x0 += step) {
      Patch p{kStrokePartSide, std::vector<float>(kStrokePartSide * kStrokePartSide)};
      for (int r = 0; r < kStrokePartSide; ++r)
        std::copy_n(img.row(y0 + r) + x0, kStrokePartSide, p.values.data() + r * kStrokePartSide);
      parts.push_back(std::move(p));
    }
  }
  return parts;
}

std::vector<Patch> sample_random_subpatches(std::span<const GrayImage> images, std::size_t count,
                                            int side, std::uint64_t seed) {
  require(!images.empty(), "no images to sample patches from");
  require(side >= 1, "patch side must be positive");
  std::vector<std::uint64_t> offsets;  // running count of placements
  std::uint64_t total = 0;
  for (const auto& img : images) {
    require(img.width() >= side && img.height() >= side, "image smaller than the sampled patch");
    total += static_cast<std::uint64_t>(img.width() - side + 1) * (img.height() - side + 1);
    offsets.push_back(total);
  }
  Rng rng(seed);
  std::vector<Patch> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::uint64_t pick = rng.index(total);
    std::size_t i = std::upper_bound(offsets.begin(), offsets.end(), pick) - offsets.begin();
    std::uint64_t local = pick - (i == 0 ? 0 : offsets[i - 1]);
    const auto& img = images[i];
    const std::uint64_t cols = img.width() - side + 1;
    const int x = static_cast<int>(local % cols);
    const int y = static_cast<int>(local / cols);
    Patch p{side, std::vector<float>(static_cast<std::size_t>(side) * side)};
    for (int r = 0; r < side; ++r) std::copy_n(img.row(y + r) + x, side, p.values.data() + r * side);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace strokeid::pixelio
