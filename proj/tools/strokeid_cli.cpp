// Command-line driver for libstrokeid. Talks to the library only through the
// C API in strokeid/strokeid.h.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "strokeid/strokeid.h"

namespace fs = std::filesystem;

namespace {

int report_failure(strokeid_status s, const std::string& context) {
  std::cerr << "error: " << context << ": " << strokeid_status_name(s) << ": " << strokeid_last_error() << '\n';
  return 1;
}

void log_to_stderr(const char* msg, void*) { std::cerr << msg << '\n'; }

struct ModelHandle {
  strokeid_model* ptr = nullptr;
  ~ModelHandle() { strokeid_model_free(ptr); }
};

struct ClassifierHandle {
  strokeid_classifier* ptr = nullptr;
  ~ClassifierHandle() { strokeid_classifier_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { strokeid_string_free(ptr); }
};

struct ClassifyFlags {
  uint32_t step = 8;
  std::string index = "exact";
  uint32_t trees = 4;
  uint32_t checks = 128;
  uint64_t seed = 0;
  bool weighted = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--step", step, "Sliding-window step in pixels")->check(CLI::PositiveNumber);
    cmd->add_option("--index", index, "Nearest-neighbour index")->check(CLI::IsMember({"exact", "kdforest"}));
    cmd->add_option("--trees", trees, "kd-forest trees")->check(CLI::PositiveNumber);
    cmd->add_option("--checks", checks, "kd-forest leaf checks")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "kd-forest seed");
    cmd->add_flag("--weighted", weighted, "Use weighted image-to-class distances");
  }

  strokeid_classify_options options() const {
    strokeid_classify_options o;
    strokeid_classify_options_init(&o);
    o.step = step;
    o.index = index == "kdforest" ? STROKEID_INDEX_KDFOREST : STROKEID_INDEX_EXACT;
    o.trees = trees;
    o.checks = checks;
    o.seed = seed;
    o.weighted = weighted ? 1 : 0;
    return o;
  }
};

int open_classifier(const std::string& model_path, const ClassifyFlags& flags, ModelHandle& model,
                    ClassifierHandle& clf) {
  if (auto s = strokeid_model_load(model_path.c_str(), &model.ptr)) return report_failure(s, "loading model");
  const auto opts = flags.options();
  if (auto s = strokeid_classifier_create(model.ptr, &opts, &clf.ptr)) return report_failure(s, "building index");
  return 0;
}

std::vector<fs::path> collect_images(const fs::path& p) {
  std::vector<fs::path> out;
  if (fs::is_directory(p)) {
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (!e.is_regular_file()) continue;
      std::string ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
  } else {
    out.push_back(p);
  }
  return out;
}

int print_json(char* json) {
  OwnedString s{json};
  std::cout << s.ptr << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strokeid: script identification of text-line images"};
  app.require_subcommand(1);
  app.set_version_flag("--version", strokeid_version());

  // train
  auto* train = app.add_subcommand("train", "Learn a filter bank and template store from a dataset");
  std::string train_dir, out_path = "model.snbn";
  strokeid_train_options topts;
  strokeid_train_options_init(&topts);
  bool weighted = false;
  train->add_option("train_dir", train_dir, "Directory with one sub-directory of images per class")
      ->required()
      ->check(CLI::ExistingDirectory);
  train->add_option("--k", topts.k, "Number of convolutional kernels")->check(CLI::PositiveNumber);
  train->add_option("--step", topts.step, "Sliding-window step in pixels")->check(CLI::PositiveNumber);
  train->add_option("--dict-patches", topts.dict_patches, "Random 8x8 patches for dictionary learning");
  train->add_option("--kmeans-iters", topts.kmeans_iters, "k-means iterations");
  train->add_option("--eps-cn", topts.eps_cn, "Contrast-normalization regularizer");
  train->add_option("--eps-zca", topts.eps_zca, "Whitening regularizer");
  train->add_flag("--weighted", weighted, "Learn discriminative template weights");
  train->add_option("--seed", topts.seed, "Random seed");
  train->add_option("--out", out_path, "Output model file");

  // classify
  auto* classify = app.add_subcommand("classify", "Classify a line image or every image in a directory");
  std::string model_path, input;
  bool as_json = false;
  ClassifyFlags cflags;
  classify->add_option("model", model_path)->required()->check(CLI::ExistingFile);
  classify->add_option("input", input, "Image file or directory")->required()->check(CLI::ExistingPath);
  cflags.attach(classify);
  classify->add_flag("--json", as_json, "Emit one JSON record per image");

  // eval-lines
  auto* eval_lines = app.add_subcommand("eval-lines", "Accuracy on a pre-segmented test split");
  std::string test_dir;
  eval_lines->add_option("model", model_path)->required()->check(CLI::ExistingFile);
  eval_lines->add_option("test_dir", test_dir)->required()->check(CLI::ExistingDirectory);
  cflags.attach(eval_lines);

  // eval-joint
  auto* eval_joint = app.add_subcommand("eval-joint", "Joint detection and script identification");
  std::string scenes_dir, dets_dir;
  double iou = 0.5;
  bool loc_only = false;
  eval_joint->add_option("model", model_path)->required()->check(CLI::ExistingFile);
  eval_joint->add_option("scenes_dir", scenes_dir, "Scene images with <stem>.txt ground truth")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_joint->add_option("dets_dir", dets_dir, "Detections as <stem>.txt")->required()->check(CLI::ExistingDirectory);
  eval_joint->add_option("--iou", iou, "IoU threshold")->check(CLI::Range(0.0, 0.999999));
  eval_joint->add_flag("--loc-only", loc_only, "Skip script classification");
  cflags.attach(eval_joint);

  // eval-cross
  auto* eval_cross = app.add_subcommand("eval-cross", "Accuracy restricted to labels shared with another domain");
  std::string common;
  eval_cross->add_option("model", model_path)->required()->check(CLI::ExistingFile);
  eval_cross->add_option("test_dir", test_dir)->required()->check(CLI::ExistingDirectory);
  eval_cross->add_option("--common", common, "Comma-separated shared labels")->required();
  cflags.attach(eval_cross);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-script corpus");
  std::string synth_out;
  strokeid_synth_options sopts;
  strokeid_synth_options_init(&sopts);
  synth->add_option("out_dir", synth_out)->required();
  synth->add_option("--scripts", sopts.num_scripts, "Number of glyph families (2-6)")->check(CLI::Range(2, 6));
  synth->add_option("--samples", sopts.samples_per_script, "Training lines per script");
  synth->add_option("--test-samples", sopts.test_samples_per_script, "Test lines per script");
  synth->add_option("--min-width", sopts.min_width);
  synth->add_option("--max-width", sopts.max_width);
  synth->add_option("--noise", sopts.noise_sigma, "Gaussian pixel noise sigma");
  synth->add_option("--style", sopts.style, "Rendering style (1 or 2)")->check(CLI::IsMember({1, 2}));
  synth->add_option("--scenes", sopts.num_scenes, "640x480 scene images with ground truth");
  synth->add_option("--seed", sopts.seed);

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Summarize a model file");
  inspect->add_option("model", model_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (*train) {
    topts.weighted = weighted ? 1 : 0;
    topts.log = log_to_stderr;
    ModelHandle model;
    if (auto s = strokeid_train(train_dir.c_str(), &topts, &model.ptr)) return report_failure(s, "training");
    if (auto s = strokeid_model_save(model.ptr, out_path.c_str())) return report_failure(s, "saving model");
    std::cerr << "wrote " << out_path << '\n';
    return 0;
  }

  if (*classify) {
    ModelHandle model;
    ClassifierHandle clf;
    if (int rc = open_classifier(model_path, cflags, model, clf)) return rc;
    std::size_t ok = 0;
    const auto images = collect_images(input);
    for (const auto& img : images) {
      strokeid_result* raw = nullptr;
      if (auto s = strokeid_classify_file(clf.ptr, img.string().c_str(), &raw)) {
        std::cerr << "warning: skipping " << img.string() << ": " << strokeid_last_error() << '\n';
        (void)s;
        continue;
      }
      ++ok;
      if (as_json) {
        OwnedString js;
        strokeid_result_json(raw, &js.ptr);
        auto j = nlohmann::json::parse(js.ptr);
        j["path"] = img.string();
        std::cout << j.dump() << '\n';
      } else {
        std::cout << img.string() << '\t' << strokeid_result_label(raw);
        for (uint32_t c = 0; c < strokeid_result_num_classes(raw); ++c) {
          const char* label = nullptr;
          double d = 0;
          strokeid_result_class(raw, c, &label, &d);
          std::cout << '\t' << label << '=' << d;
        }
        std::cout << '\n';
      }
      strokeid_result_free(raw);
    }
    if (ok == 0) {
      std::cerr << "error: no image could be classified\n";
      return 1;
    }
    return 0;
  }

  if (*eval_lines) {
    ModelHandle model;
    ClassifierHandle clf;
    if (int rc = open_classifier(model_path, cflags, model, clf)) return rc;
    char* json = nullptr;
    if (auto s = strokeid_eval_lines(clf.ptr, test_dir.c_str(), &json)) return report_failure(s, "evaluating");
    return print_json(json);
  }

  if (*eval_joint) {
    ModelHandle model;
    ClassifierHandle clf;
    if (!loc_only) {
      if (int rc = open_classifier(model_path, cflags, model, clf)) return rc;
    }
    char* json = nullptr;
    if (auto s = strokeid_eval_joint(clf.ptr, scenes_dir.c_str(), dets_dir.c_str(), iou, &json))
      return report_failure(s, "evaluating");
    return print_json(json);
  }

  if (*eval_cross) {
    ModelHandle model;
    ClassifierHandle clf;
    if (int rc = open_classifier(model_path, cflags, model, clf)) return rc;
    char* json = nullptr;
    if (auto s = strokeid_eval_cross_domain(clf.ptr, test_dir.c_str(), common.c_str(), &json))
      return report_failure(s, "evaluating");
    return print_json(json);
  }

  if (*synth) {
    if (auto s = strokeid_synth(&sopts, synth_out.c_str())) return report_failure(s, "generating corpus");
    std::cerr << "wrote corpus to " << synth_out << '\n';
    return 0;
  }

  if (*inspect) {
    ModelHandle model;
    if (auto s = strokeid_model_load(model_path.c_str(), &model.ptr)) return report_failure(s, "loading model");
    strokeid_model_info info;
    strokeid_model_get_info(model.ptr, &info);
    std::printf("version        %u\n", info.version);
    std::printf("kernels (K)    %u\n", info.k);
    std::printf("descriptor dim %u\n", info.descriptor_dim);
    std::printf("classes        %u\n", info.num_classes);
    std::printf("templates      %llu\n", static_cast<unsigned long long>(info.num_templates));
    for (uint32_t c = 0; c < info.num_classes; ++c) {
      const char* label = nullptr;
      uint64_t n = 0;
      strokeid_model_get_class(model.ptr, c, &label, &n);
      std::printf("  %-12s %llu\n", label, static_cast<unsigned long long>(n));
    }
    std::printf("weights        min %.6g  mean %.6g  max %.6g\n", info.weight_min, info.weight_mean,
                info.weight_max);
    return 0;
  }
  return 0;
}
