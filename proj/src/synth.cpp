#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/imgproc.hpp>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace strokeid::synth {

namespace fs = std::filesystem;

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names = {"arcs", "bars", "grid", "hatch", "dots", "waves"};
  return names;
}

void validate(const SynthSpec& spec) {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidArgument, "invalid synth spec: " + what); };
  const int families = static_cast<int>(family_names().size());
  if (spec.num_scripts < 2 || spec.num_scripts > families) bad("num_scripts must be in 2..6");
  if (spec.samples_per_script < 0 || spec.test_samples_per_script < 0) bad("sample counts must be >= 0");
  if (spec.height != pixelio::kLineHeight) bad("height must be 64");
  if (spec.min_width < 32 || spec.max_width < spec.min_width) bad("width range must satisfy 32 <= min <= max");
  if (spec.noise_sigma < 0) bad("noise_sigma must be >= 0");
  if (spec.style != 1 && spec.style != 2) bad("style must be 1 or 2");
  if (spec.num_scenes < 0) bad("num_scenes must be >= 0");
}

namespace {

constexpr int kShift = 4;  // sub-pixel bits for cv drawing
constexpr double kSub = 1 << kShift;

cv::Point pt(double x, double y) {
  return {static_cast<int>(std::lround(x * kSub)), static_cast<int>(std::lround(y * kSub))};
}

struct Cell {
  double x, y, w, h;
};

void stroke(cv::Mat& ink, double x0, double y0, double x1, double y1, int thick) {
  cv::line(ink, pt(x0, y0), pt(x1, y1), cv::Scalar(255), thick, cv::LINE_AA, kShift);
}

void draw_glyph(cv::Mat& ink, int family, const Cell& c, int thick, Rng& rng) {
  switch (family) {
    case 0: {  // arcs: one or two elliptical arcs
      const int arcs = static_cast<int>(rng.between(1, 2));
      for (int a = 0; a < arcs; ++a) {
        const double cx = c.x + c.w * rng.uniform(0.35, 0.65);
        const double cy = c.y + c.h * rng.uniform(0.35, 0.65);
        const double ax = c.w * rng.uniform(0.25, 0.45);
        const double ay = c.h * rng.uniform(0.25, 0.45);
        const double start = rng.uniform(0.0, 360.0);
        const double sweep = rng.uniform(180.0, 360.0);
        cv::ellipse(ink, pt(cx, cy), cv::Size(static_cast<int>(ax * kSub), static_cast<int>(ay * kSub)), 0.0, start,
                    start + sweep, cv::Scalar(255), thick, cv::LINE_AA, kShift);
      }
      break;
    }
    case 1: {  // bars: axis-aligned strokes
      const int bars = static_cast<int>(rng.between(2, 4));
      for (int b = 0; b < bars; ++b) {
        if (rng.chance(0.5)) {
          const double y = c.y + c.h * rng.uniform(0.05, 0.95);
          const double x0 = c.x + c.w * rng.uniform(0.0, 0.3);
          const double x1 = c.x + c.w * rng.uniform(0.7, 1.0);
          stroke(ink, x0, y, x1, y, thick);
        } else {
          const double x = c.x + c.w * rng.uniform(0.05, 0.95);
          const double y0 = c.y + c.h * rng.uniform(0.0, 0.3);
          const double y1 = c.y + c.h * rng.uniform(0.7, 1.0);
          stroke(ink, x, y0, x, y1, thick);
        }
      }
      break;
    }
    case 2: {  // grid: an evenly spaced lattice
      const int rows = static_cast<int>(rng.between(3, 4));
      const int cols = static_cast<int>(rng.between(3, 4));
      for (int r = 0; r < rows; ++r) {
        const double y = c.y + c.h * (r + 0.5) / rows;
        stroke(ink, c.x, y, c.x + c.w, y, thick);
      }
      for (int q = 0; q < cols; ++q) {
        const double x = c.x + c.w * (q + 0.5) / cols;
        stroke(ink, x, c.y, x, c.y + c.h, thick);
      }
      break;
    }
    case 3: {  // hatch: parallel diagonals
      const int lines = static_cast<int>(rng.between(2, 4));
      const bool rising = rng.chance(0.5);
      for (int l = 0; l < lines; ++l) {
        const double off = c.w * (l + rng.uniform(0.2, 0.8)) / lines;
        const double slant = c.w * 0.5;
        if (rising)
          stroke(ink, c.x + off - slant * 0.5, c.y + c.h, c.x + off + slant * 0.5, c.y, thick);
        else
          stroke(ink, c.x + off - slant * 0.5, c.y, c.x + off + slant * 0.5, c.y + c.h, thick);
      }
      break;
    }
    case 4: {  // dots: small filled discs
      const int dots = static_cast<int>(rng.between(3, 6));
      for (int d = 0; d < dots; ++d) {
        const double x = c.x + c.w * rng.uniform(0.1, 0.9);
        const double y = c.y + c.h * rng.uniform(0.1, 0.9);
        const int radius = static_cast<int>((thick + rng.uniform(1.0, 2.5)) * kSub);
        cv::circle(ink, pt(x, y), radius, cv::Scalar(255), cv::FILLED, cv::LINE_AA, kShift);
      }
      break;
    }
    default: {  // waves: zigzag polyline
      const int vertices = static_cast<int>(rng.between(3, 5));
      const bool top_first = rng.chance(0.5);
      std::vector<cv::Point> poly;
      for (int v = 0; v < vertices; ++v) {
        const double x = c.x + c.w * v / (vertices - 1);
        const bool top = (v % 2 == 0) == top_first;
        const double y = c.y + c.h * (top ? rng.uniform(0.0, 0.2) : rng.uniform(0.8, 1.0));
        poly.push_back(pt(x, y));
      }
      cv::polylines(ink, poly, false, cv::Scalar(255), thick, cv::LINE_AA, kShift);
      break;
    }
  }
}

}  // namespace

pixelio::GrayImage render_line(const SynthSpec& spec, int family, std::uint64_t seed) {
  require(family >= 0 && family < static_cast<int>(family_names().size()), "unknown glyph family");
  Rng rng(seed);
  const int height = spec.height;
  const int width = static_cast<int>(rng.between(spec.min_width, spec.max_width));
  const bool light = spec.style == 1;
  const int thick = static_cast<int>(light ? rng.between(2, 3) : rng.between(1, 2));
  const double scale = light ? 1.0 : 0.8;

  cv::Mat ink = cv::Mat::zeros(height, width, CV_8UC1);
  double x = rng.uniform(1.0, 6.0);
  for (;;) {
    const double gw = rng.uniform(18.0, 32.0) * scale;
    if (x + gw > width - 1) break;
    const double gh = rng.uniform(28.0, 42.0) * scale;
    const double gy = (height - gh) / 2.0 + rng.uniform(-4.0, 4.0);
    draw_glyph(ink, family, {x, gy, gw, gh}, thick, rng);
    x += gw + rng.uniform(3.0, 8.0);
    if (rng.chance(0.12)) x += rng.uniform(8.0, 16.0);  // word gap
  }

  const double background = light ? rng.uniform(170.0, 240.0) : rng.uniform(130.0, 200.0);
  const double foreground = light ? rng.uniform(10.0, 90.0) : rng.uniform(40.0, 100.0);
  pixelio::GrayImage img(width, height);
  for (int r = 0; r < height; ++r) {
    const auto* m = ink.ptr<std::uint8_t>(r);
    for (int c = 0; c < width; ++c) {
      const double alpha = m[c] / 255.0;
      const double v = background + (foreground - background) * alpha + spec.noise_sigma * rng.normal();
      img.at(c, r) = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
    }
  }
  return img;
}

namespace {

std::uint64_t sample_seed(std::uint64_t master, int split, int family, int index) {
  return mix_seed(mix_seed(mix_seed(master, static_cast<std::uint64_t>(split)), static_cast<std::uint64_t>(family)),
                  static_cast<std::uint64_t>(index));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorKind::Io, "cannot create directory '" + dir.string() + "'");
}

constexpr int kSceneWidth = 640;
constexpr int kSceneHeight = 480;
constexpr int kSceneSplit = 7;

}  // namespace

std::vector<ManifestEntry> generate_corpus(const SynthSpec& spec, const fs::path& out_dir) {
  validate(spec);
  struct Job {
    int split;
    int family;
    int index;
    fs::path rel;
  };
  std::vector<Job> jobs;
  const std::pair<const char*, int> splits[] = {{"train", spec.samples_per_script},
                                                {"test", spec.test_samples_per_script}};
  for (int s = 0; s < 2; ++s) {
    if (splits[s].second == 0) continue;
    for (int f = 0; f < spec.num_scripts; ++f) {
      const auto& label = family_names()[f];
      ensure_dir(out_dir / splits[s].first / label);
      for (int i = 0; i < splits[s].second; ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%05d.png", label.c_str(), i);
        jobs.push_back({s, f, i, fs::path(splits[s].first) / label / name});
      }
    }
  }
  ensure_dir(out_dir);
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto& job = jobs[j];
    pixelio::save_png(render_line(spec, job.family, sample_seed(spec.seed, job.split, job.family, job.index)),
                      out_dir / job.rel);
  });

  std::vector<ManifestEntry> manifest;
  std::ofstream tsv(out_dir / "manifest.tsv", std::ios::binary);
  if (!tsv) fail(ErrorKind::Io, "cannot write manifest in '" + out_dir.string() + "'");
  for (const auto& job : jobs) {
    manifest.push_back({job.rel, family_names()[job.family]});
    tsv << job.rel.generic_string() << '\t' << family_names()[job.family] << '\n';
  }
  if (spec.num_scenes > 0) generate_scene_corpus(spec, out_dir / "scenes");
  return manifest;
}

Scene render_scene(const SynthSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  Scene scene;
  scene.image = pixelio::GrayImage(kSceneWidth, kSceneHeight);
  const double base = rng.uniform(120.0, 220.0);
  const double gx = rng.uniform(-0.05, 0.05);
  const double gy = rng.uniform(-0.05, 0.05);
  for (int y = 0; y < kSceneHeight; ++y)
    for (int x = 0; x < kSceneWidth; ++x) {
      const double v = base + gx * (x - kSceneWidth / 2) + gy * (y - kSceneHeight / 2) + spec.noise_sigma * rng.normal();
      scene.image.at(x, y) = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
    }

  SynthSpec line_spec = spec;
  line_spec.max_width = std::min(spec.max_width, 480);
  line_spec.min_width = std::min(spec.min_width, line_spec.max_width);
  const int lines = static_cast<int>(rng.between(1, 4));
  std::vector<eval::BBox> placed;
  for (int l = 0; l < lines; ++l) {
    const int family = static_cast<int>(rng.index(static_cast<std::uint64_t>(spec.num_scripts)));
    const auto line = render_line(line_spec, family, rng.next());
    const double s = rng.uniform(0.6, 1.0);
    const int w = std::max(1, static_cast<int>(std::lround(line.width() * s)));
    const int h = std::max(1, static_cast<int>(std::lround(line.height() * s)));
    const auto scaled = pixelio::resize_bilinear(line, w, h);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const int x = static_cast<int>(rng.between(0, kSceneWidth - w));
      const int y = static_cast<int>(rng.between(0, kSceneHeight - h));
      const eval::BBox box{static_cast<double>(x), static_cast<double>(y), static_cast<double>(w),
                           static_cast<double>(h)};
      // Keep a 4 px gap so crops never contain a neighbour.
      const eval::BBox grown{box.x - 4, box.y - 4, box.w + 8, box.h + 8};
      bool clear = true;
      for (const auto& p : placed) clear = clear && eval::iou(grown, p) == 0.0;
      if (!clear) continue;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) scene.image.at(x + c, y + r) = scaled.at(c, r);
      placed.push_back(box);
      scene.lines.push_back({box, family_names()[family]});
      break;
    }
  }
  return scene;
}

std::vector<fs::path> generate_scene_corpus(const SynthSpec& spec, const fs::path& out_dir) {
  validate(spec);
  ensure_dir(out_dir);
  std::vector<fs::path> images(static_cast<std::size_t>(spec.num_scenes));
  parallel_for(images.size(), [&](std::size_t i) {
    const auto scene = render_scene(spec, sample_seed(spec.seed, kSceneSplit, 0, static_cast<int>(i)));
    char stem[32];
    std::snprintf(stem, sizeof stem, "scene_%04zu", i);
    images[i] = out_dir / (std::string(stem) + ".png");
    pixelio::save_png(scene.image, images[i]);
    std::ofstream gt(out_dir / (std::string(stem) + ".txt"), std::ios::binary);
    gt << eval::format_boxes(scene.lines);
    if (!gt) fail(ErrorKind::Io, "cannot write ground truth for '" + images[i].string() + "'");
  });
  return images;
}

}  // namespace strokeid::synth
