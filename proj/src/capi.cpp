#include "strokeid/strokeid.h"

#include <cstring>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "pipeline.hpp"
#include "synth.hpp"

struct strokeid_model {
  strokeid::model::Model model;
};

struct strokeid_classifier {
  std::unique_ptr<strokeid::LineClassifier> impl;
};

struct strokeid_result {
  strokeid::nbnn::I2CReport report;
};

namespace {

thread_local std::string g_last_error;

strokeid_status status_of(strokeid::ErrorKind kind) {
  using strokeid::ErrorKind;
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return STROKEID_ERR_INVALID_ARGUMENT;
    case ErrorKind::Precondition:
      return STROKEID_ERR_PRECONDITION;
    case ErrorKind::Io:
      return STROKEID_ERR_IO;
    case ErrorKind::Decode:
      return STROKEID_ERR_DECODE;
    case ErrorKind::Format:
      return STROKEID_ERR_FORMAT;
  }
  return STROKEID_ERR_INTERNAL;
}

template <class Fn>
strokeid_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return STROKEID_OK;
  } catch (const strokeid::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return STROKEID_ERR_INTERNAL;
}

void check_arg(bool ok, const char* what) {
  if (!ok) strokeid::fail(strokeid::ErrorKind::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* strokeid_version(void) { return "1.0.0"; }

const char* strokeid_last_error(void) { return g_last_error.c_str(); }

const char* strokeid_status_name(strokeid_status status) {
  switch (status) {
    case STROKEID_OK:
      return "ok";
    case STROKEID_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case STROKEID_ERR_PRECONDITION:
      return "precondition violated";
    case STROKEID_ERR_IO:
      return "i/o error";
    case STROKEID_ERR_DECODE:
      return "decode error";
    case STROKEID_ERR_FORMAT:
      return "format error";
    case STROKEID_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

void strokeid_string_free(char* s) { std::free(s); }

void strokeid_train_options_init(strokeid_train_options* opts) {
  if (!opts) return;
  const strokeid::TrainOptions d;
  *opts = {};
  opts->k = static_cast<uint32_t>(d.k);
  opts->step = static_cast<uint32_t>(d.step);
  opts->dict_patches = d.dict_patches;
  opts->kmeans_iters = static_cast<uint32_t>(d.kmeans_iters);
  opts->weighted = d.weighted;
  opts->seed = d.seed;
  opts->eps_cn = d.eps_cn;
  opts->eps_zca = d.eps_zca;
}

strokeid_status strokeid_train(const char* train_dir, const strokeid_train_options* opts, strokeid_model** out) {
  return guarded([&] {
    check_arg(train_dir && out, "train_dir and out must not be null");
    strokeid_train_options o;
    strokeid_train_options_init(&o);
    if (opts) o = *opts;
    strokeid::TrainOptions t;
    t.k = static_cast<int>(o.k);
    t.step = static_cast<int>(o.step);
    t.dict_patches = static_cast<std::size_t>(o.dict_patches);
    t.kmeans_iters = static_cast<int>(o.kmeans_iters);
    t.weighted = o.weighted != 0;
    t.seed = o.seed;
    t.eps_cn = o.eps_cn;
    t.eps_zca = o.eps_zca;
    strokeid::Logger log;
    if (o.log) log = [fn = o.log, user = o.log_user](const std::string& m) { fn(m.c_str(), user); };
    auto m = std::make_unique<strokeid_model>();
    m->model = strokeid::train(std::filesystem::path(train_dir), t, log);
    *out = m.release();
  });
}

strokeid_status strokeid_model_load(const char* path, strokeid_model** out) {
  return guarded([&] {
    check_arg(path && out, "path and out must not be null");
    auto m = std::make_unique<strokeid_model>();
    m->model = strokeid::model::load(path);
    *out = m.release();
  });
}

strokeid_status strokeid_model_save(const strokeid_model* model, const char* path) {
  return guarded([&] {
    check_arg(model && path, "model and path must not be null");
    strokeid::model::save(model->model, path);
  });
}

void strokeid_model_free(strokeid_model* model) { delete model; }

strokeid_status strokeid_model_compute_weights(strokeid_model* model) {
  return guarded([&] {
    check_arg(model, "model must not be null");
    model->model.store = strokeid::nbnn::compute_weights(model->model.store);
  });
}

strokeid_status strokeid_model_get_info(const strokeid_model* model, strokeid_model_info* info) {
  return guarded([&] {
    check_arg(model && info, "model and info must not be null");
    const auto& m = model->model;
    *info = {};
    info->version = m.version;
    info->k = static_cast<uint32_t>(m.bank.k);
    info->descriptor_dim = static_cast<uint32_t>(m.store.descriptor_dim);
    info->num_classes = static_cast<uint32_t>(m.store.classes.size());
    info->num_templates = m.store.total_templates();
    double lo = 1.0, hi = 0.0, sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : m.store.classes)
      for (float w : c.weights) {
        lo = std::min(lo, static_cast<double>(w));
        hi = std::max(hi, static_cast<double>(w));
        sum += w;
        ++n;
      }
    info->weight_min = n ? lo : 0.0;
    info->weight_max = n ? hi : 0.0;
    info->weight_mean = n ? sum / static_cast<double>(n) : 0.0;
  });
}

strokeid_status strokeid_model_get_class(const strokeid_model* model, uint32_t index, const char** label,
                                         uint64_t* num_templates) {
  return guarded([&] {
    check_arg(model != nullptr, "model must not be null");
    const auto& classes = model->model.store.classes;
    check_arg(index < classes.size(), "class index out of range");
    if (label) *label = classes[index].label.c_str();
    if (num_templates) *num_templates = classes[index].size();
  });
}

void strokeid_classify_options_init(strokeid_classify_options* opts) {
  if (!opts) return;
  const strokeid::ClassifyOptions d;
  *opts = {};
  opts->step = static_cast<uint32_t>(d.step);
  opts->weighted = d.weighted;
  opts->index = STROKEID_INDEX_EXACT;
  opts->trees = static_cast<uint32_t>(d.index.trees);
  opts->checks = static_cast<uint32_t>(d.index.checks);
  opts->seed = d.index.seed;
}

strokeid_status strokeid_classifier_create(const strokeid_model* model, const strokeid_classify_options* opts,
                                           strokeid_classifier** out) {
  return guarded([&] {
    check_arg(model && out, "model and out must not be null");
    strokeid_classify_options o;
    strokeid_classify_options_init(&o);
    if (opts) o = *opts;
    check_arg(o.index == STROKEID_INDEX_EXACT || o.index == STROKEID_INDEX_KDFOREST, "unknown index mode");
    strokeid::ClassifyOptions c;
    c.step = static_cast<int>(o.step);
    c.weighted = o.weighted != 0;
    c.index.mode = o.index == STROKEID_INDEX_KDFOREST ? strokeid::nbnn::IndexMode::KdForest
                                                      : strokeid::nbnn::IndexMode::Exact;
    c.index.trees = static_cast<int>(o.trees);
    c.index.checks = static_cast<int>(o.checks);
    c.index.seed = o.seed;
    auto clf = std::make_unique<strokeid_classifier>();
    clf->impl = std::make_unique<strokeid::LineClassifier>(model->model, c);
    *out = clf.release();
  });
}

void strokeid_classifier_free(strokeid_classifier* clf) { delete clf; }

strokeid_status strokeid_classify_file(const strokeid_classifier* clf, const char* path, strokeid_result** out) {
  return guarded([&] {
    check_arg(clf && path && out, "classifier, path and out must not be null");
    auto r = std::make_unique<strokeid_result>();
    r->report = clf->impl->classify(strokeid::pixelio::load_image(path));
    *out = r.release();
  });
}

strokeid_status strokeid_classify_gray(const strokeid_classifier* clf, const float* pixels, uint32_t width,
                                       uint32_t height, strokeid_result** out) {
  return guarded([&] {
    check_arg(clf && pixels && out, "classifier, pixels and out must not be null");
    check_arg(width > 0 && height > 0, "image dimensions must be positive");
    std::vector<float> data(pixels, pixels + static_cast<std::size_t>(width) * height);
    for (float v : data) check_arg(v >= 0.0f && v <= 255.0f, "pixel values must lie in [0, 255]");
    auto r = std::make_unique<strokeid_result>();
    r->report = clf->impl->classify(
        strokeid::pixelio::GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(data)));
    *out = r.release();
  });
}

const char* strokeid_result_label(const strokeid_result* r) {
  return r ? r->report.predicted_label().c_str() : "";
}

uint32_t strokeid_result_num_classes(const strokeid_result* r) {
  return r ? static_cast<uint32_t>(r->report.labels.size()) : 0;
}

uint64_t strokeid_result_num_queries(const strokeid_result* r) { return r ? r->report.num_queries : 0; }

strokeid_status strokeid_result_class(const strokeid_result* r, uint32_t index, const char** label,
                                      double* distance) {
  return guarded([&] {
    check_arg(r != nullptr, "result must not be null");
    check_arg(index < r->report.labels.size(), "class index out of range");
    if (label) *label = r->report.labels[index].c_str();
    if (distance) *distance = r->report.distances[index];
  });
}

strokeid_status strokeid_result_json(const strokeid_result* r, char** json_out) {
  return guarded([&] {
    check_arg(r && json_out, "result and json_out must not be null");
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t c = 0; c < r->report.labels.size(); ++c) per_class[r->report.labels[c]] = r->report.distances[c];
    nlohmann::json j = {{"label", r->report.predicted_label()},
                        {"per_class", per_class},
                        {"num_queries", r->report.num_queries}};
    *json_out = dup_string(j.dump());
  });
}

void strokeid_result_free(strokeid_result* r) { delete r; }

strokeid_status strokeid_eval_lines(const strokeid_classifier* clf, const char* test_dir, char** json_out) {
  return guarded([&] {
    check_arg(clf && test_dir && json_out, "classifier, test_dir and json_out must not be null");
    const auto ev = strokeid::eval_lines(*clf->impl, test_dir);
    *json_out = dup_string(strokeid::eval::to_json(ev.metrics).dump(2));
  });
}

strokeid_status strokeid_eval_joint(const strokeid_classifier* clf, const char* scenes_dir, const char* dets_dir,
                                    double iou_thresh, char** json_out) {
  return guarded([&] {
    check_arg(scenes_dir && dets_dir && json_out, "scenes_dir, dets_dir and json_out must not be null");
    check_arg(iou_thresh >= 0.0 && iou_thresh < 1.0, "IoU threshold must lie in [0, 1)");
    const auto ev = strokeid::eval_joint(clf ? clf->impl.get() : nullptr, scenes_dir, dets_dir, iou_thresh);
    nlohmann::json j = {{"images", ev.images},
                        {"iou_threshold", iou_thresh},
                        {"localization", strokeid::eval::to_json(ev.localization)}};
    if (ev.classified) j["joint"] = strokeid::eval::to_json(ev.joint);
    *json_out = dup_string(j.dump(2));
  });
}

strokeid_status strokeid_eval_cross_domain(const strokeid_classifier* clf, const char* test_dir,
                                           const char* common_labels, char** json_out) {
  return guarded([&] {
    check_arg(clf && test_dir && common_labels && json_out, "arguments must not be null");
    std::vector<std::string> labels;
    std::stringstream ss(common_labels);
    std::string l;
    while (std::getline(ss, l, ','))
      if (!l.empty()) labels.push_back(l);
    const auto m = strokeid::cross_domain(*clf->impl, test_dir, labels);
    *json_out = dup_string(strokeid::eval::to_json(m).dump(2));
  });
}

void strokeid_synth_options_init(strokeid_synth_options* opts) {
  if (!opts) return;
  const strokeid::synth::SynthSpec d;
  *opts = {};
  opts->num_scripts = static_cast<uint32_t>(d.num_scripts);
  opts->samples_per_script = static_cast<uint32_t>(d.samples_per_script);
  opts->test_samples_per_script = static_cast<uint32_t>(d.test_samples_per_script);
  opts->min_width = static_cast<uint32_t>(d.min_width);
  opts->max_width = static_cast<uint32_t>(d.max_width);
  opts->noise_sigma = d.noise_sigma;
  opts->style = static_cast<uint32_t>(d.style);
  opts->num_scenes = static_cast<uint32_t>(d.num_scenes);
  opts->seed = d.seed;
}

strokeid_status strokeid_synth(const strokeid_synth_options* opts, const char* out_dir) {
  return guarded([&] {
    check_arg(opts && out_dir, "options and out_dir must not be null");
    strokeid::synth::SynthSpec s;
    s.num_scripts = static_cast<int>(opts->num_scripts);
    s.samples_per_script = static_cast<int>(opts->samples_per_script);
    s.test_samples_per_script = static_cast<int>(opts->test_samples_per_script);
    s.min_width = static_cast<int>(opts->min_width);
    s.max_width = static_cast<int>(opts->max_width);
    s.noise_sigma = opts->noise_sigma;
    s.style = static_cast<int>(opts->style);
    s.num_scenes = static_cast<int>(opts->num_scenes);
    s.seed = opts->seed;
    strokeid::synth::generate_corpus(s, out_dir);
  });
}

}  // extern "C"
