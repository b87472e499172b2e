// Exercises the shared library strictly through its public header.

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <unistd.h>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "strokeid/strokeid.h"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json take_json(char* s) {
  auto j = nlohmann::json::parse(s);
  strokeid_string_free(s);
  return j;
}

strokeid_train_options small_train_options() {
  strokeid_train_options o;
  strokeid_train_options_init(&o);
  o.k = 16;
  o.dict_patches = 8000;
  o.kmeans_iters = 5;
  o.seed = 7;
  return o;
}

// One small corpus and model shared by every test in this file.
class CApi : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("strokeid_capi_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    strokeid_synth_options s;
    strokeid_synth_options_init(&s);
    s.num_scripts = 3;
    s.samples_per_script = 8;
    s.test_samples_per_script = 4;
    s.max_width = 160;
    s.num_scenes = 3;
    s.seed = 5;
    ASSERT_EQ(strokeid_synth(&s, root_.string().c_str()), STROKEID_OK) << strokeid_last_error();
    const auto opts = small_train_options();
    ASSERT_EQ(strokeid_train((root_ / "train").string().c_str(), &opts, &model_), STROKEID_OK)
        << strokeid_last_error();
  }
  static void TearDownTestSuite() {
    strokeid_model_free(model_);
    model_ = nullptr;
    std::error_code ec;
    fs::remove_all(root_, ec);
  }

  strokeid_classifier* make_classifier(strokeid_index_mode mode = STROKEID_INDEX_EXACT) {
    strokeid_classify_options o;
    strokeid_classify_options_init(&o);
    o.index = mode;
    strokeid_classifier* clf = nullptr;
    EXPECT_EQ(strokeid_classifier_create(model_, &o, &clf), STROKEID_OK) << strokeid_last_error();
    return clf;
  }

  static fs::path root_;
  static strokeid_model* model_;
};

fs::path CApi::root_;
strokeid_model* CApi::model_ = nullptr;

}  // namespace

TEST(CApiBasics, VersionAndStatusNames) {
  EXPECT_STREQ(strokeid_version(), "1.0.0");
  EXPECT_STREQ(strokeid_status_name(STROKEID_OK), "ok");
  EXPECT_NE(std::string(strokeid_status_name(STROKEID_ERR_FORMAT)), "");
}

TEST(CApiBasics, OptionDefaults) {
  strokeid_train_options t;
  strokeid_train_options_init(&t);
  EXPECT_EQ(t.k, 256u);
  EXPECT_EQ(t.step, 8u);
  EXPECT_EQ(t.dict_patches, 100000u);
  EXPECT_FLOAT_EQ(t.eps_cn, 10.0f);
  EXPECT_FLOAT_EQ(t.eps_zca, 0.1f);
  strokeid_classify_options c;
  strokeid_classify_options_init(&c);
  EXPECT_EQ(c.index, STROKEID_INDEX_EXACT);
  EXPECT_EQ(c.trees, 4u);
  EXPECT_EQ(c.checks, 128u);
}

TEST(CApiBasics, NullArgumentsAndMissingFiles) {
  strokeid_model* m = nullptr;
  EXPECT_EQ(strokeid_model_load(nullptr, &m), STROKEID_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(strokeid_last_error()), "");
  EXPECT_EQ(strokeid_model_load("/nonexistent/x.snbn", &m), STROKEID_ERR_IO);
  EXPECT_EQ(m, nullptr);
  const auto opts = small_train_options();
  EXPECT_NE(strokeid_train("/nonexistent/dir", &opts, &m), STROKEID_OK);
  strokeid_model_free(nullptr);
  strokeid_classifier_free(nullptr);
  strokeid_result_free(nullptr);
  strokeid_string_free(nullptr);
}

TEST(CApiBasics, GarbageModelIsFormatError) {
  const auto path = fs::temp_directory_path() / "strokeid_capi_garbage.snbn";
  std::ofstream(path, std::ios::binary) << "not a model";
  strokeid_model* m = nullptr;
  EXPECT_EQ(strokeid_model_load(path.string().c_str(), &m), STROKEID_ERR_FORMAT);
  fs::remove(path);
}

TEST_F(CApi, ModelInfoCountsEveryStrokePart) {
  strokeid_model_info info;
  ASSERT_EQ(strokeid_model_get_info(model_, &info), STROKEID_OK);
  EXPECT_EQ(info.version, 1u);
  EXPECT_EQ(info.k, 16u);
  EXPECT_EQ(info.descriptor_dim, 9u * 16u);
  EXPECT_EQ(info.num_classes, 3u);
  EXPECT_EQ(info.weight_min, 0.0);
  EXPECT_EQ(info.weight_max, 0.0);

  // Lines are already 64 px high, so each yields 2 * (floor((w - 32) / 8) + 1) parts.
  std::map<std::string, std::uint64_t> expected;
  std::uint64_t total = 0;
  for (const auto& e : fs::recursive_directory_iterator(root_ / "train")) {
    if (e.path().extension() != ".png") continue;
    const cv::Mat img = cv::imread(e.path().string(), cv::IMREAD_GRAYSCALE);
    ASSERT_EQ(img.rows, 64);
    const std::uint64_t n = 2 * ((img.cols - 32) / 8 + 1);
    expected[e.path().parent_path().filename().string()] += n;
    total += n;
  }
  EXPECT_EQ(info.num_templates, total);
  for (uint32_t c = 0; c < info.num_classes; ++c) {
    const char* label = nullptr;
    uint64_t n = 0;
    ASSERT_EQ(strokeid_model_get_class(model_, c, &label, &n), STROKEID_OK);
    EXPECT_EQ(n, expected.at(label)) << label;
  }
  const char* label = nullptr;
  uint64_t n = 0;
  EXPECT_EQ(strokeid_model_get_class(model_, 3, &label, &n), STROKEID_ERR_INVALID_ARGUMENT);
}

TEST_F(CApi, SameSeedGivesIdenticalModelFile) {
  const auto opts = small_train_options();
  strokeid_model* again = nullptr;
  ASSERT_EQ(strokeid_train((root_ / "train").string().c_str(), &opts, &again), STROKEID_OK);
  const auto a = root_ / "a.snbn", b = root_ / "b.snbn";
  ASSERT_EQ(strokeid_model_save(model_, a.string().c_str()), STROKEID_OK);
  ASSERT_EQ(strokeid_model_save(again, b.string().c_str()), STROKEID_OK);
  strokeid_model_free(again);
  EXPECT_EQ(slurp(a), slurp(b));

  strokeid_model* loaded = nullptr;
  ASSERT_EQ(strokeid_model_load(a.string().c_str(), &loaded), STROKEID_OK);
  const auto c = root_ / "c.snbn";
  ASSERT_EQ(strokeid_model_save(loaded, c.string().c_str()), STROKEID_OK);
  strokeid_model_free(loaded);
  EXPECT_EQ(slurp(a), slurp(c));
}

TEST_F(CApi, WeightedTrainingOnOneClassFails) {
  const auto one = root_ / "one_class";
  fs::create_directories(one);
  fs::copy(root_ / "train" / "arcs", one / "arcs");
  auto opts = small_train_options();
  opts.weighted = 1;
  strokeid_model* m = nullptr;
  EXPECT_EQ(strokeid_train(one.string().c_str(), &opts, &m), STROKEID_ERR_PRECONDITION);
  EXPECT_EQ(m, nullptr);
}

TEST_F(CApi, ComputeWeightsReachesOne) {
  const auto path = root_ / "w.snbn";
  ASSERT_EQ(strokeid_model_save(model_, path.string().c_str()), STROKEID_OK);
  strokeid_model* m = nullptr;
  ASSERT_EQ(strokeid_model_load(path.string().c_str(), &m), STROKEID_OK);
  ASSERT_EQ(strokeid_model_compute_weights(m), STROKEID_OK);
  strokeid_model_info info;
  strokeid_model_get_info(m, &info);
  EXPECT_GE(info.weight_min, 0.0);
  EXPECT_EQ(info.weight_max, 1.0);
  strokeid_model_free(m);
}

TEST_F(CApi, TrainingLinesAreMemorized) {
  auto* clf = make_classifier();
  for (const char* label : {"arcs", "bars", "grid"}) {
    const auto path = root_ / "train" / label / (std::string(label) + "_00003.png");
    strokeid_result* r = nullptr;
    ASSERT_EQ(strokeid_classify_file(clf, path.string().c_str(), &r), STROKEID_OK) << strokeid_last_error();
    EXPECT_STREQ(strokeid_result_label(r), label);
    ASSERT_EQ(strokeid_result_num_classes(r), 3u);
    for (uint32_t c = 0; c < 3; ++c) {
      const char* l = nullptr;
      double d = -1;
      ASSERT_EQ(strokeid_result_class(r, c, &l, &d), STROKEID_OK);
      if (std::strcmp(l, label) == 0) EXPECT_EQ(d, 0.0);
      else EXPECT_GT(d, 0.0);
    }
    char* js = nullptr;
    ASSERT_EQ(strokeid_result_json(r, &js), STROKEID_OK);
    const auto j = take_json(js);
    EXPECT_EQ(j.at("label"), label);
    EXPECT_EQ(j.at("per_class").size(), 3u);
    EXPECT_EQ(j.at("num_queries").get<uint64_t>(), strokeid_result_num_queries(r));
    strokeid_result_free(r);
  }
  strokeid_classifier_free(clf);
}

TEST_F(CApi, ClassifyGrayAndBadImages) {
  auto* clf = make_classifier();
  std::vector<float> px(20 * 40, 128.0f);
  strokeid_result* r = nullptr;
  ASSERT_EQ(strokeid_classify_gray(clf, px.data(), 20, 40, &r), STROKEID_OK) << strokeid_last_error();
  EXPECT_GT(strokeid_result_num_queries(r), 0u);
  strokeid_result_free(r);
  EXPECT_EQ(strokeid_classify_gray(clf, px.data(), 0, 40, &r), STROKEID_ERR_INVALID_ARGUMENT);

  const auto bad = root_ / "broken.png";
  std::ofstream(bad, std::ios::binary) << "\x89PNG garbage";
  EXPECT_EQ(strokeid_classify_file(clf, bad.string().c_str(), &r), STROKEID_ERR_DECODE);
  EXPECT_NE(std::string(strokeid_last_error()).find("broken.png"), std::string::npos);
  EXPECT_EQ(strokeid_classify_file(clf, (root_ / "missing.png").string().c_str(), &r), STROKEID_ERR_DECODE);
  fs::remove(bad);
  strokeid_classifier_free(clf);
}

TEST_F(CApi, EvalOnTrainingSplitIsPerfect) {
  auto* clf = make_classifier();
  char* js = nullptr;
  ASSERT_EQ(strokeid_eval_lines(clf, (root_ / "train").string().c_str(), &js), STROKEID_OK) << strokeid_last_error();
  const auto j = take_json(js);
  EXPECT_EQ(j.at("accuracy").get<double>(), 1.0);
  const auto& conf = j.at("confusion");
  ASSERT_EQ(conf.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    long row = 0;
    for (const auto& v : conf[i]) row += v.get<long>();
    EXPECT_EQ(row, 8);
  }
  strokeid_classifier_free(clf);
}

TEST_F(CApi, HeldOutConfusionRowsMatchFileCounts) {
  auto* clf = make_classifier(STROKEID_INDEX_KDFOREST);
  char* js = nullptr;
  ASSERT_EQ(strokeid_eval_lines(clf, (root_ / "test").string().c_str(), &js), STROKEID_OK);
  const auto j = take_json(js);
  for (const auto& row : j.at("confusion")) {
    long sum = 0;
    for (const auto& v : row) sum += v.get<long>();
    EXPECT_EQ(sum, 4);
  }
  EXPECT_GE(j.at("accuracy").get<double>(), 0.0);
  strokeid_classifier_free(clf);
}

TEST_F(CApi, JointEvalWithGroundTruthDetections) {
  const auto scenes = root_ / "scenes";
  char* js = nullptr;
  ASSERT_EQ(strokeid_eval_joint(nullptr, scenes.string().c_str(), scenes.string().c_str(), 0.5, &js), STROKEID_OK)
      << strokeid_last_error();
  auto j = take_json(js);
  EXPECT_EQ(j.at("images").get<int>(), 3);
  EXPECT_EQ(j.at("localization").at("fscore").get<double>(), 1.0);
  EXPECT_FALSE(j.contains("joint"));

  auto* clf = make_classifier();
  ASSERT_EQ(strokeid_eval_joint(clf, scenes.string().c_str(), scenes.string().c_str(), 0.5, &js), STROKEID_OK);
  j = take_json(js);
  EXPECT_TRUE(j.contains("joint"));
  EXPECT_LE(j.at("joint").at("fscore").get<double>(), 1.0);
  strokeid_classifier_free(clf);
}

TEST_F(CApi, CrossDomainValidatesLabels) {
  auto* clf = make_classifier();
  char* js = nullptr;
  ASSERT_EQ(strokeid_eval_cross_domain(clf, (root_ / "test").string().c_str(), "arcs,bars", &js), STROKEID_OK)
      << strokeid_last_error();
  const auto j = take_json(js);
  EXPECT_EQ(j.at("num_ground_truth").get<int>(), 8);
  EXPECT_EQ(strokeid_eval_cross_domain(clf, (root_ / "test").string().c_str(), "klingon", &js),
            STROKEID_ERR_INVALID_ARGUMENT);
  strokeid_classifier_free(clf);
}
