#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "encoder.hpp"
#include "eval.hpp"
#include "model_file.hpp"
#include "nbnn.hpp"

namespace strokeid {

using Logger = std::function<void(const std::string&)>;

struct Sample {
  std::filesystem::path path;
  std::string label;
};

// Pre-segmented layout: <dir>/<class_label>/*.png|jpg|jpeg, sorted by class
// then file name. An empty class directory is an error.
std::vector<Sample> scan_dataset(const std::filesystem::path& dir);

// Image files directly under `dir` (or `dir` itself when it is a file), sorted.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& path);

struct TrainOptions {
  int k = encoder::kDefaultKernels;
  int step = 8;
  std::size_t dict_patches = 100000;
  int kmeans_iters = encoder::kDefaultKmeansIters;
  bool weighted = false;
  std::uint64_t seed = 0;
  float eps_cn = encoder::kDefaultEpsCn;
  float eps_zca = encoder::kDefaultEpsZca;
};

model::Model train(const std::vector<Sample>& samples, const TrainOptions& opts, const Logger& log = {});
model::Model train(const std::filesystem::path& train_dir, const TrainOptions& opts, const Logger& log = {});

struct ClassifyOptions {
  int step = 8;
  bool weighted = false;
  nbnn::IndexParams index;
};

// Resize, encode and classify text lines against one model.
class LineClassifier {
 public:
  LineClassifier(const model::Model& model, const ClassifyOptions& opts);

  const model::Model& model() const { return *model_; }
  const ClassifyOptions& options() const { return opts_; }
  const encoder::Encoder& encoder() const { return encoder_; }
  const nbnn::Classifier& nbnn() const { return nbnn_; }

  std::vector<encoder::Descriptor> describe(const pixelio::GrayImage& line) const;
  nbnn::I2CReport classify(const pixelio::GrayImage& line) const;

 private:
  const model::Model* model_;
  ClassifyOptions opts_;
  encoder::Encoder encoder_;
  nbnn::Classifier nbnn_;
};

struct LineResult {
  std::filesystem::path path;
  std::string truth;  // empty when unknown
  std::optional<nbnn::I2CReport> report;
  std::string error;  // set when the image could not be processed
};

std::vector<LineResult> classify_files(const LineClassifier& clf, const std::vector<Sample>& samples);

struct LineEvaluation {
  eval::Metrics metrics;
  std::vector<LineResult> results;
};

LineEvaluation eval_lines(const LineClassifier& clf, const std::filesystem::path& test_dir);

struct JointEvaluation {
  eval::Metrics localization;
  eval::Metrics joint;  // empty when script classification was skipped
  bool classified = false;
  std::size_t images = 0;
};

// Scenes are <scenes_dir>/<stem>.(png|jpg) with ground truth <stem>.txt;
// detections are read from <dets_dir>/<stem>.txt (missing means none).
JointEvaluation eval_joint(const LineClassifier* clf, const std::filesystem::path& scenes_dir,
                           const std::filesystem::path& dets_dir, double iou_thresh, const Logger& log = {});

eval::Metrics cross_domain(const LineClassifier& clf, const std::filesystem::path& test_dir,
                           const std::vector<std::string>& common_labels);

}  // namespace strokeid
