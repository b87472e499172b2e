#include "kdforest.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

#include "nbnn.hpp"
#include "rng.hpp"

namespace strokeid::nbnn {

namespace {

constexpr int kVarianceSample = 100;
constexpr int kTopDims = 5;

double sq_distance(const float* a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double d = static_cast<double>(a[j]) - b[j];
    acc += d * d;
  }
  return acc;
}

struct Branch {
  double priority;  // accumulated split distance, orders the queue
  double bound;     // strict lower bound on any distance below this node
  int tree;
  int node;
};

struct Later {
  bool operator()(const Branch& a, const Branch& b) const {
    if (a.priority != b.priority) return a.priority > b.priority;
    if (a.tree != b.tree) return a.tree > b.tree;
    return a.node > b.node;
  }
};

}  // namespace

KdTreeSet::KdTreeSet(const encoder::RowMatrixF& points, int trees, std::uint64_t seed) : points_(&points) {
  const int n = static_cast<int>(points.rows());
  Rng rng(seed);
  trees_.resize(std::max(1, trees));
  for (auto& nodes : trees_) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    nodes.reserve(2 * static_cast<std::size_t>(n));
    if (n > 0) build(nodes, idx, rng);
  }
}

int KdTreeSet::build(std::vector<Node>& nodes, std::span<int> idx, Rng& rng) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (idx.size() == 1) {
    nodes[id].point = idx[0];
    return id;
  }
  const auto& pts = *points_;
  const int dim = static_cast<int>(pts.cols());
  const std::size_t sample = std::min<std::size_t>(idx.size(), kVarianceSample);
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (std::size_t i = 0; i < sample; ++i) {
    const float* p = pts.row(idx[i]).data();
    for (int j = 0; j < dim; ++j) mean[j] += p[j];
  }
  for (auto& m : mean) m /= static_cast<double>(sample);
  for (std::size_t i = 0; i < sample; ++i) {
    const float* p = pts.row(idx[i]).data();
    for (int j = 0; j < dim; ++j) var[j] += (p[j] - mean[j]) * (p[j] - mean[j]);
  }
  std::vector<int> dims(dim);
  std::iota(dims.begin(), dims.end(), 0);
  const int top = std::min(kTopDims, dim);
  std::partial_sort(dims.begin(), dims.begin() + top, dims.end(), [&](int a, int b) {
    return var[a] != var[b] ? var[a] > var[b] : a < b;
  });
  const int split_dim = dims[rng.index(static_cast<std::uint64_t>(top))];
  const float split_value = static_cast<float>(mean[split_dim]);

  auto mid = std::partition(idx.begin(), idx.end(), [&](int i) { return pts(i, split_dim) < split_value; });
  std::size_t left_count = static_cast<std::size_t>(mid - idx.begin());
  bool separating = true;
  if (left_count == 0 || left_count == idx.size()) {
    // No spread along the chosen dimension: halve the set so depth stays bounded.
    left_count = idx.size() / 2;
    separating = false;
  }
  const int left = build(nodes, idx.subspan(0, left_count), rng);
  const int right = build(nodes, idx.subspan(left_count), rng);
  nodes[id].split_dim = split_dim;
  nodes[id].split_value = split_value;
  nodes[id].left = left;
  nodes[id].right = right;
  nodes[id].separating = separating;
  return id;
}

Match KdTreeSet::search(std::span<const float> query, int checks) const {
  const auto& pts = *points_;
  const std::size_t n = static_cast<std::size_t>(pts.rows());
  Match best{0, std::numeric_limits<double>::infinity()};
  if (n == 0) return best;
  std::vector<bool> seen(n, false);
  std::size_t checked = 0;
  std::priority_queue<Branch, std::vector<Branch>, Later> pending;

  auto descend = [&](int tree, int node, double priority, double bound) {
    const auto& nodes = trees_[tree];
    if (bound > best.sq_distance) return;
    while (nodes[node].split_dim >= 0) {
      const Node& nd = nodes[node];
      const double diff = static_cast<double>(query[nd.split_dim]) - nd.split_value;
      const int near = diff < 0.0 ? nd.left : nd.right;
      const int far = diff < 0.0 ? nd.right : nd.left;
      const double far_bound = nd.separating ? std::max(bound, diff * diff) : bound;
      pending.push({priority + diff * diff, far_bound, tree, far});
      node = near;
    }
    const int p = nodes[node].point;
    if (seen[p]) return;
    seen[p] = true;
    ++checked;
    const double d = sq_distance(pts.row(p).data(), query);
    if (d < best.sq_distance || (d == best.sq_distance && static_cast<std::size_t>(p) < best.index)) {
      best = {static_cast<std::size_t>(p), d};
    }
  };

  for (int t = 0; t < static_cast<int>(trees_.size()); ++t) descend(t, 0, 0.0, 0.0);
  while (!pending.empty() && checked < static_cast<std::size_t>(checks)) {
    const Branch b = pending.top();
    pending.pop();
    descend(b.tree, b.node, b.priority, b.bound);
  }
  return best;
}

KdForest::KdForest(std::span<const encoder::RowMatrixF* const> class_points, int trees, std::uint64_t seed) {
  sets_.reserve(class_points.size());
  for (std::size_t c = 0; c < class_points.size(); ++c)
    sets_.emplace_back(*class_points[c], trees, mix_seed(seed, c));
}

}  // namespace strokeid::nbnn
