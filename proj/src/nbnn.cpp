#include "nbnn.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "error.hpp"
#include "kdforest.hpp"
#include "parallel.hpp"

namespace strokeid::nbnn {

std::size_t TemplateStore::class_index(const std::string& label) const {
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (classes[c].label == label) return c;
  fail(ErrorKind::InvalidArgument, "unknown class label '" + label + "'");
}

std::size_t TemplateStore::total_templates() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.size();
  return n;
}

void validate(const TemplateStore& store) {
  auto bad = [](const std::string& what) { fail(ErrorKind::Format, "invalid template store: " + what); };
  if (store.descriptor_dim < 1) bad("descriptor dimension must be positive");
  if (store.classes.empty()) bad("no classes");
  std::set<std::string> seen;
  for (const auto& c : store.classes) {
    if (!seen.insert(c.label).second) bad("duplicate label '" + c.label + "'");
    if (c.templates.rows() < 1) bad("class '" + c.label + "' has no templates");
    if (c.templates.cols() != store.descriptor_dim) bad("class '" + c.label + "' has wrong template length");
    if (c.weights.size() != c.size()) bad("class '" + c.label + "' weight count mismatch");
    for (float w : c.weights)
      if (!(w >= 0.0f && w <= 1.0f)) bad("class '" + c.label + "' has a weight outside [0, 1]");
  }
}

RowMatrixF to_matrix(std::span<const Descriptor> descriptors, int dim) {
  RowMatrixF m(static_cast<Eigen::Index>(descriptors.size()), dim);
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    require(descriptors[i].size() == static_cast<std::size_t>(dim),
            "descriptor length " + std::to_string(descriptors[i].size()) + " != " + std::to_string(dim));
    std::copy(descriptors[i].begin(), descriptors[i].end(), m.row(static_cast<Eigen::Index>(i)).data());
  }
  return m;
}

TemplateStore build_store(std::span<const LabeledBag> bags) {
  require(!bags.empty(), "build_store needs at least one labeled bag");
  TemplateStore store;
  std::vector<std::string> order;
  std::vector<std::vector<const Descriptor*>> grouped;
  for (const auto& bag : bags) {
    require(!bag.descriptors.empty(), "empty descriptor bag for label '" + bag.label + "'");
    for (const auto& d : bag.descriptors) {
      if (store.descriptor_dim == 0) store.descriptor_dim = static_cast<int>(d.size());
      if (d.size() != static_cast<std::size_t>(store.descriptor_dim) || d.empty())
        fail(ErrorKind::InvalidArgument, "descriptor dimension mismatch in bag '" + bag.label + "' (" +
                                             std::to_string(d.size()) + " vs " +
                                             std::to_string(store.descriptor_dim) + ")");
    }
    auto it = std::find(order.begin(), order.end(), bag.label);
    std::size_t c = static_cast<std::size_t>(it - order.begin());
    if (it == order.end()) {
      order.push_back(bag.label);
      grouped.emplace_back();
    }
    for (const auto& d : bag.descriptors) grouped[c].push_back(&d);
  }
  for (std::size_t c = 0; c < order.size(); ++c) {
    ClassEntry entry;
    entry.label = order[c];
    entry.templates.resize(static_cast<Eigen::Index>(grouped[c].size()), store.descriptor_dim);
    for (std::size_t i = 0; i < grouped[c].size(); ++i)
      std::copy(grouped[c][i]->begin(), grouped[c][i]->end(), entry.templates.row(static_cast<Eigen::Index>(i)).data());
    entry.weights.assign(grouped[c].size(), 0.0f);
    store.classes.push_back(std::move(entry));
  }
  return store;
}

namespace {

double exact_sq_distance(const float* a, const float* b, Eigen::Index dim) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    acc += d * d;
  }
  return acc;
}

constexpr Eigen::Index kQueryChunk = 256;

}  // namespace

std::vector<Match> exact_nearest(const RowMatrixF& templates, const RowMatrixF& queries) {
  const Eigen::Index n = templates.rows();
  const Eigen::Index dim = templates.cols();
  require(n >= 1, "nearest-neighbour search in an empty template set");
  require(queries.cols() == dim, "query dimension does not match templates");
  const Eigen::VectorXf t_sq = templates.rowwise().squaredNorm();
  const float t_sq_max = t_sq.maxCoeff();
  // Bound on the float screening error of |t|^2 - 2 q.t, relative to the
  // magnitudes involved; anything within it is re-checked in double.
  const double rel_tol = 8.0 * static_cast<double>(dim) * std::numeric_limits<float>::epsilon();

  std::vector<Match> out(static_cast<std::size_t>(queries.rows()));
  RowMatrixF dots;
  for (Eigen::Index q0 = 0; q0 < queries.rows(); q0 += kQueryChunk) {
    const Eigen::Index rows = std::min(kQueryChunk, queries.rows() - q0);
    dots.noalias() = queries.middleRows(q0, rows) * templates.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const float* q = queries.row(q0 + r).data();
      const double q_sq = queries.row(q0 + r).squaredNorm();
      float screen_min = std::numeric_limits<float>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) screen_min = std::min(screen_min, t_sq[j] - 2.0f * dots(r, j));
      const double tol = rel_tol * (q_sq + t_sq_max) + 1e-30;
      Match best{0, std::numeric_limits<double>::infinity()};
      for (Eigen::Index j = 0; j < n; ++j) {
        if (static_cast<double>(t_sq[j] - 2.0f * dots(r, j)) > screen_min + tol) continue;
        const double d = exact_sq_distance(q, templates.row(j).data(), dim);
        if (d < best.sq_distance) best = {static_cast<std::size_t>(j), d};
      }
      out[static_cast<std::size_t>(q0 + r)] = best;
    }
  }
  return out;
}

Classifier::Classifier(const TemplateStore& store, IndexParams params) : store_(&store), params_(params) {
  validate(store);
  if (params_.mode == IndexMode::KdForest) {
    require(params_.trees >= 1 && params_.checks >= 1, "kd-forest needs trees >= 1 and checks >= 1");
    std::vector<const RowMatrixF*> points;
    for (const auto& c : store.classes) points.push_back(&c.templates);
    forest_ = std::make_unique<KdForest>(points, params_.trees, params_.seed);
  }
}

Classifier::~Classifier() = default;
Classifier::Classifier(Classifier&&) noexcept = default;
Classifier& Classifier::operator=(Classifier&&) noexcept = default;

std::vector<Match> Classifier::nearest(std::size_t class_idx, const RowMatrixF& queries) const {
  require(class_idx < store_->classes.size(), "class index out of range");
  const auto& entry = store_->classes[class_idx];
  require(queries.cols() == store_->descriptor_dim, "query dimension does not match the store");
  if (!forest_) return exact_nearest(entry.templates, queries);
  std::vector<Match> out(static_cast<std::size_t>(queries.rows()));
  const auto& set = forest_->for_class(class_idx);
  for (Eigen::Index r = 0; r < queries.rows(); ++r)
    out[static_cast<std::size_t>(r)] =
        set.search(std::span<const float>(queries.row(r).data(), static_cast<std::size_t>(queries.cols())), params_.checks);
  return out;
}

Match Classifier::nn_in_class(const std::string& label, std::span<const float> query) const {
  const std::size_t c = store_->class_index(label);
  require(query.size() == static_cast<std::size_t>(store_->descriptor_dim), "query dimension does not match the store");
  RowMatrixF q = Eigen::Map<const RowMatrixF>(query.data(), 1, store_->descriptor_dim);
  return nearest(c, q).front();
}

double Classifier::i2c_distance(const std::string& label, std::span<const Descriptor> queries, bool weighted) const {
  const std::size_t c = store_->class_index(label);
  require(!queries.empty(), "I2C distance needs at least one query descriptor");
  const auto matches = nearest(c, to_matrix(queries, store_->descriptor_dim));
  const auto& weights = store_->classes[c].weights;
  double total = 0.0;
  for (const auto& m : matches) total += (weighted ? 1.0 - weights[m.index] : 1.0) * m.sq_distance;
  return total;
}

I2CReport Classifier::classify(std::span<const Descriptor> queries, bool weighted) const {
  require(!queries.empty(), "classification needs at least one query descriptor");
  const RowMatrixF q = to_matrix(queries, store_->descriptor_dim);
  I2CReport report;
  const std::size_t classes = store_->classes.size();
  report.num_queries = queries.size();
  report.num_searches = classes * queries.size();
  report.unweighted.assign(classes, 0.0);
  report.weighted.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    report.labels.push_back(store_->classes[c].label);
    const auto& weights = store_->classes[c].weights;
    for (const auto& m : nearest(c, q)) {
      report.unweighted[c] += m.sq_distance;
      report.weighted[c] += (1.0 - weights[m.index]) * m.sq_distance;
    }
  }
  report.distances = weighted ? report.weighted : report.unweighted;
  report.predicted = static_cast<std::size_t>(
      std::min_element(report.distances.begin(), report.distances.end()) - report.distances.begin());
  return report;
}

Match nn_in_class(const TemplateStore& store, const std::string& label, std::span<const float> query,
                  const IndexParams& params) {
  return Classifier(store, params).nn_in_class(label, query);
}

double i2c_distance(const TemplateStore& store, const std::string& label, std::span<const Descriptor> queries,
                    bool weighted, const IndexParams& params) {
  return Classifier(store, params).i2c_distance(label, queries, weighted);
}

I2CReport classify(const TemplateStore& store, std::span<const Descriptor> queries, bool weighted,
                   const IndexParams& params) {
  return Classifier(store, params).classify(queries, weighted);
}

TemplateStore compute_weights(TemplateStore store) {
  validate(store);
  if (store.classes.size() < 2)
    fail(ErrorKind::Precondition, "template weighting needs at least 2 classes");
  const std::size_t classes = store.classes.size();
  std::vector<std::vector<double>> raw(classes);
  for (std::size_t c = 0; c < classes; ++c) raw[c].assign(store.classes[c].size(), 0.0);

  // One task per (own class, other class) pair; each writes its own slot.
  std::vector<std::vector<std::vector<Match>>> nn(classes, std::vector<std::vector<Match>>(classes));
  parallel_for(classes * classes, [&](std::size_t task) {
    const std::size_t own = task / classes;
    const std::size_t other = task % classes;
    if (own == other) return;
    nn[own][other] = exact_nearest(store.classes[other].templates, store.classes[own].templates);
  });
  double global_max = 0.0;
  for (std::size_t own = 0; own < classes; ++own) {
    for (std::size_t other = 0; other < classes; ++other) {
      if (own == other) continue;
      for (std::size_t t = 0; t < raw[own].size(); ++t)
        raw[own][t] = std::max(raw[own][t], nn[own][other][t].sq_distance);
    }
    for (double r : raw[own]) global_max = std::max(global_max, r);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    auto& w = store.classes[c].weights;
    for (std::size_t t = 0; t < w.size(); ++t)
      w[t] = global_max > 0.0 ? static_cast<float>(std::min(1.0, raw[c][t] / global_max)) : 0.0f;
  }
  return store;
}

}  // namespace strokeid::nbnn
