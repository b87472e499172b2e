#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include <opencv2/imgcodecs.hpp>

#include "error.hpp"
#include "pixelio.hpp"
#include "support.hpp"

using namespace strokeid;
using namespace strokeid::pixelio;

namespace {

GrayImage random_image(int w, int h, std::mt19937& gen) {
  std::uniform_real_distribution<float> d(0.0f, 255.0f);
  GrayImage img(w, h);
  for (auto& v : img.data()) v = d(gen);
  return img;
}

}  // namespace

TEST(LoadImage, WhitePngIsAll255) {
  support::TempDir dir("pixelio");
  const auto path = dir / "white.png";
  cv::imwrite(path.string(), cv::Mat(4, 4, CV_8UC1, cv::Scalar(255)));
  const auto img = load_image(path);
  ASSERT_EQ(img.width(), 4);
  ASSERT_EQ(img.height(), 4);
  for (float v : img.data()) EXPECT_EQ(v, 255.0f);
}

TEST(LoadImage, RedPngUsesLumaFormula) {
  support::TempDir dir("pixelio");
  const auto path = dir / "red.png";
  cv::imwrite(path.string(), cv::Mat(2, 2, CV_8UC3, cv::Scalar(0, 0, 255)));  // BGR
  const auto img = load_image(path);
  ASSERT_EQ(img.width(), 2);
  for (float v : img.data()) EXPECT_NEAR(v, 76.245, 1e-4);
}

TEST(LoadImage, TruncatedFileIsDecodeError) {
  support::TempDir dir("pixelio");
  const auto good = dir / "good.png";
  cv::imwrite(good.string(), cv::Mat(16, 16, CV_8UC1, cv::Scalar(9)));
  std::ifstream in(good, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto bad = dir / "cut.png";
  std::ofstream(bad, std::ios::binary) << bytes.substr(0, bytes.size() / 3);
  try {
    load_image(bad);
    FAIL() << "expected a decode error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Decode);
    EXPECT_NE(std::string(e.what()).find("cut.png"), std::string::npos);
  }
  EXPECT_THROW(load_image(dir / "missing.png"), Error);
}

TEST(ResizeToHeight, ScalesWidthByAspect) {
  const auto out = resize_to_height(GrayImage(200, 100, 10.0f));
  EXPECT_EQ(out.width(), 128);
  EXPECT_EQ(out.height(), 64);
}

TEST(ResizeToHeight, IdentityWhenAlreadyAtTarget) {
  std::mt19937 gen(1);
  const auto img = random_image(64, 64, gen);
  EXPECT_EQ(resize_to_height(img), img);
}

TEST(ResizeToHeight, NarrowLinePaddedByEdgeReplication) {
  std::mt19937 gen(2);
  const auto img = random_image(10, 64, gen);
  const auto out = resize_to_height(img);
  ASSERT_EQ(out.width(), 32);
  ASSERT_EQ(out.height(), 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 10; ++x) EXPECT_EQ(out.at(x, y), img.at(x, y));
    for (int x = 10; x < 32; ++x) EXPECT_EQ(out.at(x, y), img.at(9, y));
  }
}

TEST(ResizeToHeight, ConstantImagesStayExact) {
  std::mt19937 gen(3);
  std::uniform_int_distribution<int> wd(1, 700), hd(1, 300);
  for (int i = 0; i < 50; ++i) {
    const float level = static_cast<float>(gen() % 256);
    const auto once = resize_to_height(GrayImage(wd(gen), hd(gen), level));
    const auto twice = resize_to_height(once);
    EXPECT_EQ(once, twice);
    for (float v : twice.data()) EXPECT_EQ(v, level);
  }
}

TEST(ExtractStrokeparts, CountsMatchExamples) {
  EXPECT_EQ(extract_strokeparts(GrayImage(64, 64), 8).size(), 10u);
  EXPECT_EQ(extract_strokeparts(GrayImage(32, 64), 16).size(), 2u);
  EXPECT_EQ(extract_strokeparts(GrayImage(100, 64), 16).size(), 10u);
}

TEST(ExtractStrokeparts, CountMatchesClosedFormForRandomWidths) {
  std::mt19937 gen(4);
  std::uniform_int_distribution<int> wd(32, 1024), sd(1, 40);
  for (int i = 0; i < 200; ++i) {
    const int w = wd(gen);
    const int step = i % 3 == 0 ? 8 : (i % 3 == 1 ? 16 : sd(gen));
    const auto parts = extract_strokeparts(GrayImage(w, 64), step);
    EXPECT_EQ(parts.size(), 2u * ((w - 32) / step + 1)) << "width " << w << " step " << step;
    EXPECT_EQ(parts.size(), strokepart_count(w, step));
  }
}

TEST(ExtractStrokeparts, PatchesAreExactSubRectanglesInRowMajorOrder) {
  std::mt19937 gen(5);
  const auto img = random_image(93, 64, gen);
  const int step = 7;
  const auto parts = extract_strokeparts(img, step);
  const std::size_t per_row = (93 - 32) / step + 1;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const int y0 = static_cast<int>(i / per_row) * 32;
    const int x0 = static_cast<int>(i % per_row) * step;
    ASSERT_EQ(parts[i].side, 32);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) ASSERT_EQ(parts[i].values[r * 32 + c], img.at(x0 + c, y0 + r));
  }
}

TEST(ExtractStrokeparts, RejectsNarrowOrWrongHeight) {
  EXPECT_THROW(extract_strokeparts(GrayImage(31, 64), 8), Error);
  EXPECT_THROW(extract_strokeparts(GrayImage(64, 63), 8), Error);
  EXPECT_THROW(extract_strokeparts(GrayImage(64, 64), 0), Error);
}

TEST(SampleRandomSubpatches, DeterministicForSeed) {
  std::mt19937 gen(6);
  std::vector<GrayImage> imgs{random_image(80, 64, gen), random_image(200, 64, gen)};
  const auto a = sample_random_subpatches(imgs, 300, 8, 42);
  const auto b = sample_random_subpatches(imgs, 300, 8, 42);
  const auto c = sample_random_subpatches(imgs, 300, 8, 43);
  ASSERT_EQ(a.size(), 300u);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].values, b[i].values);
    differs = differs || a[i].values != c[i].values;
  }
  EXPECT_TRUE(differs);
}

TEST(SampleRandomSubpatches, EdgeCases) {
  std::vector<GrayImage> flat{GrayImage(40, 64, 77.0f)};
  EXPECT_TRUE(sample_random_subpatches(flat, 0, 8, 1).empty());
  const auto five = sample_random_subpatches(flat, 5, 8, 1);
  ASSERT_EQ(five.size(), 5u);
  for (const auto& p : five) {
    ASSERT_EQ(p.values.size(), 64u);
    for (float v : p.values) EXPECT_EQ(v, 77.0f);
  }
  EXPECT_THROW(sample_random_subpatches(std::vector<GrayImage>{}, 3, 8, 1), Error);
}

TEST(SampleRandomSubpatches, PatchesComeFromTheImages) {
  // Pixel value encodes (image, x, y) so every sample can be located.
  std::vector<GrayImage> imgs;
  for (int i = 0; i < 2; ++i) {
    GrayImage img(20, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 20; ++x) img.at(x, y) = static_cast<float>(i * 100 + x) + y / 100.0f;
    imgs.push_back(img);
  }
  for (const auto& p : sample_random_subpatches(imgs, 200, 8, 9)) {
    const float top_left = p.values[0];
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) EXPECT_NEAR(p.values[r * 8 + c], top_left + c + r / 100.0f, 1e-4);
  }
}
