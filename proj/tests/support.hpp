#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "nbnn.hpp"

namespace strokeid::support {

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("strokeid_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

struct BruteForceResult {
  std::vector<double> distances;
  std::size_t predicted = 0;
};

// Independent NBNN: every query against every template, double precision,
// lowest index / class order on ties.
inline BruteForceResult brute_force_nbnn(const nbnn::TemplateStore& store,
                                         const std::vector<std::vector<float>>& queries, bool weighted) {
  BruteForceResult r;
  for (const auto& c : store.classes) {
    double total = 0.0;
    for (const auto& q : queries) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (Eigen::Index t = 0; t < c.templates.rows(); ++t) {
        double d = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
          const double diff = static_cast<double>(q[j]) - static_cast<double>(c.templates(t, static_cast<Eigen::Index>(j)));
          d += diff * diff;
        }
        if (d < best) {
          best = d;
          arg = static_cast<std::size_t>(t);
        }
      }
      total += (weighted ? 1.0 - c.weights[arg] : 1.0) * best;
    }
    r.distances.push_back(total);
  }
  for (std::size_t c = 1; c < r.distances.size(); ++c)
    if (r.distances[c] < r.distances[r.predicted]) r.predicted = c;
  return r;
}

struct RandomInstance {
  nbnn::TemplateStore store;
  std::vector<std::vector<float>> queries;
};

// Small random store: up to 5 classes, up to 50 templates in total, dim <= 8.
// Values are drawn from a coarse grid so exact ties occur now and then.
inline RandomInstance random_instance(std::mt19937_64& gen, bool coarse) {
  std::uniform_int_distribution<int> classes_d(2, 5), dim_d(1, 8), per_class_d(1, 10), queries_d(1, 12);
  std::uniform_real_distribution<float> val(-5.0f, 5.0f);
  std::uniform_int_distribution<int> grid(-3, 3);
  auto draw = [&] { return coarse ? static_cast<float>(grid(gen)) : val(gen); };
  const int classes = classes_d(gen);
  const int dim = dim_d(gen);
  std::vector<nbnn::LabeledBag> bags;
  for (int c = 0; c < classes; ++c) {
    nbnn::LabeledBag bag{"c" + std::to_string(c), {}};
    const int n = per_class_d(gen);
    for (int t = 0; t < n; ++t) {
      std::vector<float> d(dim);
      for (auto& v : d) v = draw();
      bag.descriptors.push_back(d);
    }
    bags.push_back(std::move(bag));
  }
  RandomInstance inst{nbnn::build_store(bags), {}};
  const int nq = queries_d(gen);
  for (int q = 0; q < nq; ++q) {
    std::vector<float> d(dim);
    for (auto& v : d) v = draw();
    inst.queries.push_back(d);
  }
  return inst;
}

}  // namespace strokeid::support
