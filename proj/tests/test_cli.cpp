// Runs the strokeid executable end to end on a tiny synthetic corpus.

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int exit_code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(STROKEID_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("strokeid_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    corpus_ = (dir_ / "corpus").string();
    model_ = (dir_ / "model.snbn").string();
    ASSERT_EQ(run("synth " + corpus_ + " --scripts 3 --samples 6 --test-samples 3 --max-width 160 --scenes 2 --seed 9")
                  .exit_code,
              0);
    ASSERT_EQ(run("train " + corpus_ + "/train --k 16 --dict-patches 6000 --kmeans-iters 4 --seed 1 --out " + model_)
                  .exit_code,
              0);
  }
  static void TearDownTestSuite() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }

  static fs::path dir_;
  static std::string corpus_, model_;
};

fs::path Cli::dir_;
std::string Cli::corpus_, Cli::model_;

}  // namespace

TEST_F(Cli, InspectFreshModel) {
  const auto r = run("inspect " + model_);
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("descriptor dim 144"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("classes        3"), std::string::npos);
  EXPECT_NE(r.out.find("min 0  mean 0  max 0"), std::string::npos) << r.out;
}

TEST_F(Cli, WeightedModelHasMaxWeightOne) {
  const auto w = (dir_ / "weighted.snbn").string();
  ASSERT_EQ(run("train " + corpus_ + "/train --k 16 --dict-patches 6000 --kmeans-iters 4 --seed 1 --weighted --out " + w)
                .exit_code,
            0);
  const auto r = run("inspect " + w);
  EXPECT_NE(r.out.find("max 1\n"), std::string::npos) << r.out;
}

TEST_F(Cli, TrainingIsDeterministic) {
  const auto again = (dir_ / "again.snbn").string();
  ASSERT_EQ(run("train " + corpus_ + "/train --k 16 --dict-patches 6000 --kmeans-iters 4 --seed 1 --out " + again)
                .exit_code,
            0);
  EXPECT_EQ(slurp(model_), slurp(again));
}

TEST_F(Cli, WeightedOnOneClassFails) {
  const auto one = dir_ / "one";
  fs::create_directories(one);
  fs::copy(fs::path(corpus_) / "train" / "bars", one / "bars");
  EXPECT_NE(run("train " + one.string() + " --k 8 --dict-patches 2000 --weighted --out " + (dir_ / "x.snbn").string())
                .exit_code,
            0);
}

TEST_F(Cli, ClassifyDirectoryAsJson) {
  const auto r = run("classify " + model_ + " " + corpus_ + "/train --json");
  ASSERT_EQ(r.exit_code, 0);
  const auto records = lines(r.out);
  ASSERT_EQ(records.size(), 18u);
  std::string prev;
  for (const auto& line : records) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("per_class").size(), 3u);
    const std::string path = j.at("path");
    EXPECT_LT(prev, path);
    prev = path;
    // Memorization: each training line lands in its own class at distance 0.
    const std::string truth = fs::path(path).parent_path().filename().string();
    EXPECT_EQ(j.at("label"), truth);
    EXPECT_EQ(j.at("per_class").at(truth).get<double>(), 0.0);
  }
  EXPECT_EQ(run("classify " + model_ + " " + corpus_ + "/train --json").out, r.out);
}

TEST_F(Cli, ClassifySkipsUnreadableImages) {
  const auto mixed = dir_ / "mixed";
  fs::create_directories(mixed);
  fs::copy(fs::path(corpus_) / "test" / "arcs" / "arcs_00000.png", mixed / "a.png");
  std::ofstream(mixed / "b.png") << "broken";
  auto r = run("classify " + model_ + " " + mixed.string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(lines(r.out).size(), 1u);
  fs::remove(mixed / "a.png");
  r = run("classify " + model_ + " " + mixed.string());
  EXPECT_NE(r.exit_code, 0);
}

TEST_F(Cli, EvalLines) {
  auto r = run("eval-lines " + model_ + " " + corpus_ + "/train");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out).at("accuracy").get<double>(), 1.0);
  r = run("eval-lines " + model_ + " " + corpus_ + "/test --index kdforest --checks 64");
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("num_ground_truth").get<int>(), 9);
}

TEST_F(Cli, EvalJointAndCross) {
  const auto scenes = corpus_ + "/scenes";
  auto r = run("eval-joint " + model_ + " " + scenes + " " + scenes + " --loc-only");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out).at("localization").at("fscore").get<double>(), 1.0);
  r = run("eval-joint " + model_ + " " + scenes + " " + scenes);
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_TRUE(nlohmann::json::parse(r.out).contains("joint"));
  r = run("eval-cross " + model_ + " " + corpus_ + "/test --common arcs,grid");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out).at("num_ground_truth").get<int>(), 6);
}

TEST_F(Cli, EvalJointNeedsGroundTruth) {
  const auto scenes = dir_ / "scenes_no_gt";
  fs::create_directories(scenes);
  fs::copy(fs::path(corpus_) / "scenes" / "scene_0000.png", scenes / "scene_0000.png");
  EXPECT_NE(run("eval-joint " + model_ + " " + scenes.string() + " " + scenes.string() + " --loc-only").exit_code, 0);
}

TEST(CliArgs, UsageErrors) {
  EXPECT_NE(run("").exit_code, 0);
  EXPECT_NE(run("classify /nonexistent.snbn x.png").exit_code, 0);
  EXPECT_NE(run("synth /tmp/never --scripts 9").exit_code, 0);
  EXPECT_EQ(run("--version").exit_code, 0);
}
