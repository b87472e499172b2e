#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "encoder.hpp"

namespace strokeid::nbnn {

using encoder::Descriptor;
using encoder::RowMatrixF;

struct ClassEntry {
  std::string label;
  RowMatrixF templates;        // n_C x dim
  std::vector<float> weights;  // n_C, in [0, 1]

  std::size_t size() const { return static_cast<std::size_t>(templates.rows()); }
  friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

struct TemplateStore {
  int descriptor_dim = 0;
  std::vector<ClassEntry> classes;

  std::size_t class_index(const std::string& label) const;  // throws on unknown label
  std::size_t total_templates() const;
  friend bool operator==(const TemplateStore&, const TemplateStore&) = default;
};

// Throws unless labels are unique, every class is non-empty and every
// template/weight array has the right size.
void validate(const TemplateStore& store);

struct LabeledBag {
  std::string label;
  std::vector<Descriptor> descriptors;
};

// Groups templates by label in first-appearance order; weights start at 0.
TemplateStore build_store(std::span<const LabeledBag> bags);

enum class IndexMode { Exact, KdForest };

struct IndexParams {
  IndexMode mode = IndexMode::Exact;
  int trees = 4;
  int checks = 128;
  std::uint64_t seed = 0;
};

struct Match {
  std::size_t index = 0;
  double sq_distance = 0.0;
};

class KdForest;

struct I2CReport {
  std::vector<std::string> labels;
  std::vector<double> unweighted;  // per class
  std::vector<double> weighted;    // per class, same nearest neighbours
  std::vector<double> distances;   // whichever of the two was requested
  std::size_t predicted = 0;       // argmin of `distances`, lowest class on ties
  std::size_t num_queries = 0;
  std::size_t num_searches = 0;    // classes x queries

  const std::string& predicted_label() const { return labels[predicted]; }
};

// Nearest-neighbour search over a store; exact or through a randomized
// kd-forest per class. The store must outlive the classifier.
class Classifier {
 public:
  Classifier(const TemplateStore& store, IndexParams params = {});
  ~Classifier();
  Classifier(Classifier&&) noexcept;
  Classifier& operator=(Classifier&&) noexcept;

  const TemplateStore& store() const { return *store_; }
  const IndexParams& params() const { return params_; }
  const KdForest* forest() const { return forest_.get(); }

  std::vector<Match> nearest(std::size_t class_idx, const RowMatrixF& queries) const;
  Match nn_in_class(const std::string& label, std::span<const float> query) const;
  double i2c_distance(const std::string& label, std::span<const Descriptor> queries, bool weighted) const;
  I2CReport classify(std::span<const Descriptor> queries, bool weighted) const;

 private:
  const TemplateStore* store_;
  IndexParams params_;
  std::unique_ptr<KdForest> forest_;
};

// Exhaustive nearest neighbours of each query row among `templates`. Squared
// distances are evaluated exactly (in double) for every candidate that a
// float GEMM screen cannot rule out, so results match a brute-force scan.
std::vector<Match> exact_nearest(const RowMatrixF& templates, const RowMatrixF& queries);

// Convenience wrappers building a one-off classifier.
Match nn_in_class(const TemplateStore& store, const std::string& label, std::span<const float> query,
                  const IndexParams& params = {});
double i2c_distance(const TemplateStore& store, const std::string& label, std::span<const Descriptor> queries,
                    bool weighted, const IndexParams& params = {});
I2CReport classify(const TemplateStore& store, std::span<const Descriptor> queries, bool weighted,
                   const IndexParams& params = {});

// w(t) = max over other classes of |t - NN_C'(t)|^2, divided by the largest
// such value over all templates. Always uses exact search. All-zero raw
// values leave every weight at 0.
TemplateStore compute_weights(TemplateStore store);

RowMatrixF to_matrix(std::span<const Descriptor> descriptors, int dim);

}  // namespace strokeid::nbnn
