#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "error.hpp"
#include "parallel.hpp"
#include "pixelio.hpp"
#include "rng.hpp"

namespace strokeid {

namespace fs = std::filesystem;

namespace {

bool is_image(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<Sample> scan_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, "dataset directory '" + dir.string() + "' not found");
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) classes.push_back(e.path());
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) fail(ErrorKind::InvalidArgument, "no class directories under '" + dir.string() + "'");
  std::vector<Sample> out;
  for (const auto& c : classes) {
    auto files = list_images(c);
    if (files.empty()) fail(ErrorKind::InvalidArgument, "class directory '" + c.filename().string() + "' has no images");
    for (auto& f : files) out.push_back({std::move(f), c.filename().string()});
  }
  return out;
}

std::vector<fs::path> list_images(const fs::path& path) {
  if (fs::is_regular_file(path)) return {path};
  if (!fs::is_directory(path)) fail(ErrorKind::Io, "'" + path.string() + "' is neither a file nor a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_regular_file() && is_image(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

model::Model train(const std::vector<Sample>& samples, const TrainOptions& opts, const Logger& log) {
  require(!samples.empty(), "no training samples");
  require(opts.step >= 1, "sliding-window step must be positive");
  Stopwatch total;

  Stopwatch t;
  std::vector<pixelio::GrayImage> lines(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    lines[i] = pixelio::resize_to_height(pixelio::load_image(samples[i].path));
  });
  say(log, "loaded " + std::to_string(lines.size()) + " training lines in " + fixed(t.seconds()) + " s");

  t = Stopwatch();
  const auto patches = pixelio::sample_random_subpatches(lines, opts.dict_patches, pixelio::kReceptiveFieldSide,
                                                         mix_seed(opts.seed, 1));
  encoder::DictionaryOptions dict;
  dict.k = opts.k;
  dict.iters = opts.kmeans_iters;
  dict.seed = mix_seed(opts.seed, 2);
  dict.eps_cn = opts.eps_cn;
  dict.eps_zca = opts.eps_zca;
  model::Model m;
  m.bank = encoder::learn_dictionary(patches, dict);
  say(log, "learned " + std::to_string(opts.k) + " kernels from " + std::to_string(patches.size()) + " patches in " +
               fixed(t.seconds()) + " s");

  t = Stopwatch();
  const encoder::Encoder enc(m.bank);
  std::vector<nbnn::LabeledBag> bags(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    bags[i] = {samples[i].label, enc.encode_line(lines[i], opts.step)};
  });
  m.store = nbnn::build_store(bags);
  say(log, "encoded " + std::to_string(m.store.total_templates()) + " stroke-part templates (dim " +
               std::to_string(m.store.descriptor_dim) + ") in " + fixed(t.seconds()) + " s");
  for (const auto& c : m.store.classes)
    say(log, "  class " + c.label + ": " + std::to_string(c.size()) + " templates");

  if (opts.weighted) {
    t = Stopwatch();
    m.store = nbnn::compute_weights(std::move(m.store));
    say(log, "computed template weights in " + fixed(t.seconds()) + " s");
  }
  say(log, "training finished in " + fixed(total.seconds()) + " s");
  return m;
}

model::Model train(const fs::path& train_dir, const TrainOptions& opts, const Logger& log) {
  return train(scan_dataset(train_dir), opts, log);
}

LineClassifier::LineClassifier(const model::Model& model, const ClassifyOptions& opts)
    : model_(&model), opts_(opts), encoder_(model.bank), nbnn_(model.store, opts.index) {
  require(opts.step >= 1, "sliding-window step must be positive");
}

std::vector<encoder::Descriptor> LineClassifier::describe(const pixelio::GrayImage& line) const {
  return encoder_.encode_line(pixelio::resize_to_height(line), opts_.step);
}

nbnn::I2CReport LineClassifier::classify(const pixelio::GrayImage& line) const {
  return nbnn_.classify(describe(line), opts_.weighted);
}

std::vector<LineResult> classify_files(const LineClassifier& clf, const std::vector<Sample>& samples) {
  std::vector<LineResult> results(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    auto& r = results[i];
    r.path = samples[i].path;
    r.truth = samples[i].label;
    try {
      r.report = clf.classify(pixelio::load_image(samples[i].path));
    } catch (const Error& e) {
      r.error = e.what();
    }
  });
  return results;
}

LineEvaluation eval_lines(const LineClassifier& clf, const fs::path& test_dir) {
  LineEvaluation ev;
  ev.results = classify_files(clf, scan_dataset(test_dir));
  std::vector<eval::LabeledId> preds, gts;
  for (const auto& r : ev.results) {
    if (!r.error.empty()) fail(ErrorKind::Decode, r.error);
    gts.push_back({r.path.string(), r.truth});
    preds.push_back({r.path.string(), r.report->predicted_label()});
  }
  ev.metrics = eval::line_accuracy(preds, gts);
  return ev;
}

JointEvaluation eval_joint(const LineClassifier* clf, const fs::path& scenes_dir, const fs::path& dets_dir,
                           double iou_thresh, const Logger& log) {
  const auto images = list_images(scenes_dir);
  if (images.empty()) fail(ErrorKind::InvalidArgument, "no scene images in '" + scenes_dir.string() + "'");
  std::vector<eval::GTLine> gts;
  std::vector<eval::DetLine> dets;
  for (const auto& img_path : images) {
    const std::string id = img_path.stem().string();
    const fs::path gt_path = scenes_dir / (id + ".txt");
    if (!fs::exists(gt_path)) fail(ErrorKind::Io, "missing ground-truth file '" + gt_path.string() + "'");
    for (auto& b : eval::read_box_file(gt_path)) {
      if (b.script.empty()) fail(ErrorKind::Format, gt_path.string() + ": ground-truth line without script");
      gts.push_back({b.bbox, b.script, id});
    }
    const fs::path det_path = dets_dir / (id + ".txt");
    if (!fs::exists(det_path)) {
      say(log, "warning: no detections for " + id);
      continue;
    }
    for (auto& b : eval::read_box_file(det_path)) dets.push_back({b.bbox, b.script, id});
  }

  JointEvaluation out;
  out.images = images.size();
  out.localization = eval::joint_eval(dets, gts, {iou_thresh, false});
  if (!clf) return out;

  // Classify every detection from its crop; cropping clamps to the image.
  std::vector<std::string> ids;
  for (const auto& p : images) ids.push_back(p.stem().string());
  parallel_for(images.size(), [&](std::size_t i) {
    std::optional<pixelio::GrayImage> scene;
    for (auto& d : dets) {
      if (d.source_image != ids[i]) continue;
      if (!scene) scene = pixelio::load_image(images[i]);
      const int x0 = std::max(0, static_cast<int>(std::floor(d.bbox.x)));
      const int y0 = std::max(0, static_cast<int>(std::floor(d.bbox.y)));
      const int x1 = std::min(scene->width(), static_cast<int>(std::ceil(d.bbox.x + d.bbox.w)));
      const int y1 = std::min(scene->height(), static_cast<int>(std::ceil(d.bbox.y + d.bbox.h)));
      if (x1 <= x0 || y1 <= y0) {
        d.predicted_script.clear();
        continue;
      }
      d.predicted_script = clf->classify(scene->crop(x0, y0, x1 - x0, y1 - y0)).predicted_label();
    }
  });
  out.joint = eval::joint_eval(dets, gts, {iou_thresh, true});
  out.classified = true;
  return out;
}

eval::Metrics cross_domain(const LineClassifier& clf, const fs::path& test_dir,
                           const std::vector<std::string>& common_labels) {
  const auto samples = scan_dataset(test_dir);
  std::vector<std::string> store_labels, test_labels;
  for (const auto& c : clf.model().store.classes) store_labels.push_back(c.label);
  std::set<std::string> seen;
  std::vector<eval::LabeledId> gts;
  for (const auto& s : samples) {
    if (seen.insert(s.label).second) test_labels.push_back(s.label);
    gts.push_back({s.path.string(), s.label});
  }
  return eval::cross_domain_report(store_labels, test_labels, gts, common_labels, [&](const eval::LabeledId& s) {
    return clf.classify(pixelio::load_image(s.id)).predicted_label();
  });
}

}  // namespace strokeid
