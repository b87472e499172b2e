#include "eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "error.hpp"

namespace strokeid::eval {

double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double harmonic_mean(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

namespace {

std::size_t label_index(const std::vector<std::string>& labels, const std::string& l) {
  return static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), l) - labels.begin());
}

void init_confusion(Metrics& m, const std::set<std::string>& labels) {
  m.labels.assign(labels.begin(), labels.end());
  m.confusion.assign(m.labels.size(), std::vector<long>(m.labels.size(), 0));
}

}  // namespace

Metrics line_accuracy(std::span<const LabeledId> preds, std::span<const LabeledId> gts) {
  std::map<std::string, std::string> truth;
  std::vector<std::string> duplicated;
  for (const auto& g : gts)
    if (!truth.emplace(g.id, g.label).second) duplicated.push_back(g.id);
  if (!duplicated.empty()) {
    std::string msg = "duplicate ground-truth ids:";
    for (const auto& d : duplicated) msg += " " + d;
    fail(ErrorKind::InvalidArgument, msg);
  }
  std::vector<std::string> unknown;
  std::set<std::string> predicted_ids;
  for (const auto& p : preds) {
    if (!truth.count(p.id)) unknown.push_back(p.id);
    if (!predicted_ids.insert(p.id).second) unknown.push_back(p.id + " (predicted twice)");
  }
  if (!unknown.empty()) {
    std::string msg = "predictions without matching ground truth:";
    for (const auto& u : unknown) msg += " " + u;
    fail(ErrorKind::InvalidArgument, msg);
  }

  Metrics m;
  std::set<std::string> labels;
  for (const auto& g : gts) labels.insert(g.label);
  for (const auto& p : preds) labels.insert(p.label);
  init_confusion(m, labels);
  long correct = 0;
  for (const auto& p : preds) {
    const std::string& gt = truth.at(p.id);
    ++m.confusion[label_index(m.labels, gt)][label_index(m.labels, p.label)];
    auto& stats = m.per_class[gt];
    ++stats.count;
    if (gt == p.label) {
      ++stats.correct;
      ++correct;
    }
  }
  const auto total = static_cast<long>(preds.size());
  m.true_positives = correct;
  m.num_detections = total;
  m.num_ground_truth = total;
  m.accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
  m.precision = m.recall = m.fscore = m.accuracy;
  return m;
}

Metrics joint_eval(std::span<const DetLine> dets, std::span<const GTLine> gts, const JointOptions& opts) {
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> images;
  for (std::size_t i = 0; i < dets.size(); ++i) images[dets[i].source_image].first.push_back(i);
  for (std::size_t i = 0; i < gts.size(); ++i) images[gts[i].source_image].second.push_back(i);

  Metrics m;
  std::set<std::string> labels;
  for (const auto& g : gts)
    if (g.script != kUnknownScript) labels.insert(g.script);
  for (const auto& d : dets)
    if (!d.predicted_script.empty() && d.predicted_script != kUnknownScript) labels.insert(d.predicted_script);
  init_confusion(m, labels);
  for (const auto& l : labels) m.per_class[l];

  long tp = 0, scored_dets = 0, scored_gts = 0, matched = 0, matched_correct = 0;
  for (const auto& [image, members] : images) {
    const auto& [det_ids, gt_ids] = members;
    struct Pair {
      double overlap;
      std::size_t det, gt;  // positions within this image
    };
    std::vector<Pair> pairs;
    for (std::size_t d = 0; d < det_ids.size(); ++d)
      for (std::size_t g = 0; g < gt_ids.size(); ++g) {
        const double o = iou(dets[det_ids[d]].bbox, gts[gt_ids[g]].bbox);
        if (o > opts.iou_thresh) pairs.push_back({o, d, g});
      }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.overlap != b.overlap) return a.overlap > b.overlap;
      if (a.det != b.det) return a.det < b.det;
      return a.gt < b.gt;
    });
    std::vector<long> det_match(det_ids.size(), -1);
    std::vector<bool> gt_used(gt_ids.size(), false);
    for (const auto& p : pairs) {
      if (det_match[p.det] >= 0 || gt_used[p.gt]) continue;
      det_match[p.det] = static_cast<long>(p.gt);
      gt_used[p.gt] = true;
    }

    for (std::size_t g = 0; g < gt_ids.size(); ++g) {
      const auto& gt = gts[gt_ids[g]];
      if (gt.script == kUnknownScript) continue;
      ++scored_gts;
      ++m.per_class[gt.script].count;
    }
    for (std::size_t d = 0; d < det_ids.size(); ++d) {
      const auto& det = dets[det_ids[d]];
      if (det_match[d] < 0) {
        ++scored_dets;
        // Diagnostic: script right on the best-overlapping box despite failing the IoU gate.
        double best = 0.0;
        const GTLine* best_gt = nullptr;
        for (std::size_t g = 0; g < gt_ids.size(); ++g) {
          const double o = iou(det.bbox, gts[gt_ids[g]].bbox);
          if (o > best) {
            best = o;
            best_gt = &gts[gt_ids[g]];
          }
        }
        if (best_gt && best_gt->script != kUnknownScript && best_gt->script == det.predicted_script)
          ++m.sub_threshold_script_hits;
        continue;
      }
      const auto& gt = gts[gt_ids[static_cast<std::size_t>(det_match[d])]];
      if (gt.script == kUnknownScript) continue;
      ++scored_dets;
      ++matched;
      const bool script_ok = det.predicted_script == gt.script;
      if (script_ok) ++matched_correct;
      if (labels.count(det.predicted_script))
        ++m.confusion[label_index(m.labels, gt.script)][label_index(m.labels, det.predicted_script)];
      if (!opts.check_script || script_ok) {
        ++tp;
        ++m.per_class[gt.script].correct;
      }
    }
  }
  m.true_positives = tp;
  m.num_detections = scored_dets;
  m.num_ground_truth = scored_gts;
  m.precision = scored_dets > 0 ? static_cast<double>(tp) / scored_dets : 0.0;
  m.recall = scored_gts > 0 ? static_cast<double>(tp) / scored_gts : 0.0;
  m.fscore = harmonic_mean(m.precision, m.recall);
  m.accuracy = matched > 0 ? static_cast<double>(matched_correct) / matched : 0.0;
  return m;
}

Metrics cross_domain_report(std::span<const std::string> store_labels, std::span<const std::string> test_labels,
                            std::span<const LabeledId> test_gts, std::span<const std::string> common_labels,
                            const std::function<std::string(const LabeledId&)>& predict) {
  const std::set<std::string> a(store_labels.begin(), store_labels.end());
  const std::set<std::string> b(test_labels.begin(), test_labels.end());
  std::set<std::string> common;
  for (const auto& l : common_labels) {
    if (!a.count(l) || !b.count(l))
      fail(ErrorKind::InvalidArgument, "label '" + l + "' is not shared by both domains");
    common.insert(l);
  }
  if (common.empty()) fail(ErrorKind::InvalidArgument, "cross-domain evaluation needs at least one common label");
  std::vector<LabeledId> kept, preds;
  for (const auto& s : test_gts) {
    if (!common.count(s.label)) continue;
    kept.push_back(s);
    preds.push_back({s.id, predict(s)});
  }
  return line_accuracy(preds, kept);
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, s] : m.per_class) {
    per_class[label] = {{"count", s.count},
                        {"correct", s.correct},
                        {"accuracy", s.count > 0 ? static_cast<double>(s.correct) / s.count : 0.0}};
  }
  return {{"precision", m.precision},
          {"recall", m.recall},
          {"fscore", m.fscore},
          {"accuracy", m.accuracy},
          {"true_positives", m.true_positives},
          {"num_detections", m.num_detections},
          {"num_ground_truth", m.num_ground_truth},
          {"sub_threshold_script_hits", m.sub_threshold_script_hits},
          {"labels", m.labels},
          {"confusion", m.confusion},
          {"per_class", per_class}};
}

std::vector<BoxRecord> parse_boxes(const std::string& text, const std::string& name) {
  std::vector<BoxRecord> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    auto bad = [&](const std::string& why) {
      fail(ErrorKind::Format, name + ":" + std::to_string(lineno) + ": " + why);
    };
    if (fields.size() != 4 && fields.size() != 5) bad("expected x,y,w,h[,script]");
    double v[4];
    for (int i = 0; i < 4; ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stod(fields[i], &used);
        if (fields[i].find_first_not_of(" \t", used) != std::string::npos) bad("bad number '" + fields[i] + "'");
      } catch (const std::logic_error&) {
        bad("bad number '" + fields[i] + "'");
      }
    }
    if (!(v[2] > 0 && v[3] > 0)) bad("box width and height must be positive");
    BoxRecord rec{{v[0], v[1], v[2], v[3]}, {}};
    if (fields.size() == 5) {
      std::string s = fields[4];
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      rec.script = s;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<BoxRecord> read_box_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read box file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_boxes(ss.str(), path.string());
}

std::string format_boxes(std::span<const BoxRecord> boxes) {
  std::ostringstream out;
  for (const auto& b : boxes) {
    out << b.bbox.x << ',' << b.bbox.y << ',' << b.bbox.w << ',' << b.bbox.h;
    if (!b.script.empty()) out << ',' << b.script;
    out << '\n';
  }
  return out.str();
}

}  // namespace strokeid::eval
