#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "encoder.hpp"

namespace strokeid {
class Rng;
}

namespace strokeid::nbnn {

struct Match;

// Randomized kd-trees over the rows of one template matrix. Each split uses
// a dimension drawn among the highest-variance ones and the sample mean as
// threshold; leaves hold single points. Queries descend every tree and then
// keep expanding the closest pending branches from one shared priority queue
// until `checks` distinct points have been compared.
class KdTreeSet {
 public:
  KdTreeSet(const encoder::RowMatrixF& points, int trees, std::uint64_t seed);

  Match search(std::span<const float> query, int checks) const;

  struct Node {
    int split_dim = -1;  // -1 marks a leaf
    float split_value = 0.0f;
    int left = -1;
    int right = -1;
    int point = -1;
    bool separating = true;  // false when the split fell back to halving
    friend bool operator==(const Node&, const Node&) = default;
  };
  const std::vector<std::vector<Node>>& trees() const { return trees_; }

 private:
  int build(std::vector<Node>& nodes, std::span<int> idx, Rng& rng);

  const encoder::RowMatrixF* points_;
  std::vector<std::vector<Node>> trees_;  // root is node 0
};

class KdForest {
 public:
  KdForest(std::span<const encoder::RowMatrixF* const> class_points, int trees, std::uint64_t seed);
  const KdTreeSet& for_class(std::size_t c) const { return sets_[c]; }
  std::size_t size() const { return sets_.size(); }

 private:
  std::vector<KdTreeSet> sets_;
};

}  // namespace strokeid::nbnn
