#include <gtest/gtest.h>

#include <random>

#include "error.hpp"
#include "model_file.hpp"
#include "support.hpp"

using namespace strokeid;

namespace {

model::Model random_model(std::mt19937_64& gen, int k) {
  std::normal_distribution<float> n01;
  model::Model m;
  auto& b = m.bank;
  b.k = k;
  b.eps_cn = 10.0f;
  b.zca.eps_zca = 0.1f;
  b.zca.mean.resize(64);
  b.zca.matrix.resize(64 * 64);
  b.centroids.resize(static_cast<std::size_t>(k) * 64);
  for (auto* v : {&b.zca.mean, &b.zca.matrix, &b.centroids})
    for (auto& x : *v) x = n01(gen);
  std::uniform_int_distribution<int> classes(1, 4), count(1, 6);
  std::vector<nbnn::LabeledBag> bags;
  for (int c = classes(gen); c > 0; --c) {
    nbnn::LabeledBag bag{"script_" + std::to_string(c) + (c % 2 ? "_é" : ""), {}};
    for (int t = count(gen); t > 0; --t) {
      encoder::Descriptor d(static_cast<std::size_t>(b.descriptor_dim()));
      for (auto& x : d) x = std::abs(n01(gen));
      bag.descriptors.push_back(d);
    }
    bags.push_back(std::move(bag));
  }
  m.store = nbnn::build_store(bags);
  std::uniform_real_distribution<float> w(0, 1);
  for (auto& c : m.store.classes)
    for (auto& x : c.weights) x = w(gen);
  return m;
}

}  // namespace

TEST(ModelFile, RoundTripIsBitwise) {
  std::mt19937_64 gen(1);
  support::TempDir dir("model_rt");
  for (int i = 0; i < 20; ++i) {
    const auto m = random_model(gen, 1 + i % 5);
    const auto bytes = model::serialize(m);
    const auto back = model::deserialize(bytes);
    EXPECT_TRUE(back == m);
    EXPECT_EQ(model::serialize(back), bytes);
    const auto path = dir / ("m" + std::to_string(i) + ".snbn");
    model::save(m, path);
    EXPECT_TRUE(model::load(path) == m);
  }
}

TEST(ModelFile, HeaderLayout) {
  std::mt19937_64 gen(2);
  const auto bytes = model::serialize(random_model(gen, 2));
  ASSERT_GE(bytes.size(), 6u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SNBN");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
}

TEST(ModelFile, RejectsBadMagicVersionAndTruncation) {
  std::mt19937_64 gen(3);
  const auto bytes = model::serialize(random_model(gen, 3));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(model::deserialize(bad), Error);
  bad = bytes;
  bad[4] = 2;
  try {
    model::deserialize(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> trunc(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    EXPECT_THROW(model::deserialize(trunc), Error) << cut;
  }
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(model::deserialize(bad), Error);
}

TEST(ModelFile, MissingFileIsIoError) {
  try {
    model::load("/nonexistent/model.snbn");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}
