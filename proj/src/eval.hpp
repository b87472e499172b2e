#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace strokeid::eval {

inline constexpr const char* kUnknownScript = "unknown";

struct BBox {
  double x = 0, y = 0, w = 0, h = 0;  // top-left corner and size, pixels
  friend bool operator==(const BBox&, const BBox&) = default;
};

double iou(const BBox& a, const BBox& b);

struct GTLine {
  BBox bbox;
  std::string script;  // kUnknownScript marks a don't-care region
  std::string source_image;
};

struct DetLine {
  BBox bbox;
  std::string predicted_script;
  std::string source_image;
};

struct LabeledId {
  std::string id;
  std::string label;
};

struct ClassStats {
  long count = 0;    // ground-truth instances
  long correct = 0;  // true positives / correct predictions
};

struct Metrics {
  double precision = 0, recall = 0, fscore = 0, accuracy = 0;
  long true_positives = 0;
  long num_detections = 0;  // scored detections (excludes don't-care matches)
  long num_ground_truth = 0;
  long sub_threshold_script_hits = 0;  // diagnostic only
  std::vector<std::string> labels;
  std::vector<std::vector<long>> confusion;  // [ground truth][predicted], over `labels`
  std::map<std::string, ClassStats> per_class;
};

double harmonic_mean(double p, double r);

// Single-label accuracy over pre-segmented lines. Precision, recall and
// F-score are the micro averages, which all equal the accuracy.
Metrics line_accuracy(std::span<const LabeledId> preds, std::span<const LabeledId> gts);

struct JointOptions {
  double iou_thresh = 0.5;
  bool check_script = true;
};

// Per source image, pairs with IoU above the threshold are matched one to one
// greedily by descending IoU (ties: detection order, then ground-truth order).
// A match is a true positive when the script agrees or scripts are not
// checked. Matches to `unknown` ground truth are ignored entirely.
Metrics joint_eval(std::span<const DetLine> dets, std::span<const GTLine> gts, const JointOptions& opts = {});

// Accuracy restricted to test samples whose ground truth lies in
// `common_labels`, which must be a non-empty subset of both label sets.
Metrics cross_domain_report(std::span<const std::string> store_labels, std::span<const std::string> test_labels,
                            std::span<const LabeledId> test_gts, std::span<const std::string> common_labels,
                            const std::function<std::string(const LabeledId&)>& predict);

nlohmann::json to_json(const Metrics& m);

struct BoxRecord {
  BBox bbox;
  std::string script;  // empty when the line has only four fields
};

// `x,y,w,h[,script]` per line; blank lines and lines starting with '#'
// are skipped.
std::vector<BoxRecord> parse_boxes(const std::string& text, const std::string& name);
std::vector<BoxRecord> read_box_file(const std::filesystem::path& path);
std::string format_boxes(std::span<const BoxRecord> boxes);

}  // namespace strokeid::eval
