#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pixelio.hpp"

namespace strokeid::encoder {

inline constexpr float kDefaultEpsCn = 10.0f;
inline constexpr float kDefaultEpsZca = 0.1f;
inline constexpr int kDefaultKernels = 256;
inline constexpr int kPoolGrid = 3;
inline constexpr int kDefaultKmeansIters = 10;

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// (v - mean(v)) / sqrt(var(v) + eps_cn), population variance.
std::vector<double> contrast_normalize(std::span<const float> v, double eps_cn = kDefaultEpsCn);
std::vector<double> contrast_normalize(std::span<const double> v, double eps_cn = kDefaultEpsCn);

struct ZcaTransform {
  std::vector<float> mean;    // dim
  std::vector<float> matrix;  // dim x dim, row-major, symmetric
  float eps_zca = kDefaultEpsZca;

  int dim() const { return static_cast<int>(mean.size()); }
  friend bool operator==(const ZcaTransform&, const ZcaTransform&) = default;
};

// W = E diag((lambda + eps)^-1/2) E^T from the covariance of the mean-centred
// rows. Works for any dimension; the encoder uses 64.
ZcaTransform fit_zca(std::span<const std::vector<double>> patches, double eps_zca = kDefaultEpsZca);

// matrix * (v - mean), evaluated in double.
std::vector<double> apply_zca(const ZcaTransform& z, std::span<const double> v);

// Spherical k-means on the rows of `data`: unit-norm centroids, assignment by
// largest dot product (lowest index on ties). Empty clusters are re-seeded
// with the point farthest from its current centroid. Returns K x dim.
RowMatrixF spherical_kmeans(const RowMatrixF& data, int k, int iters, std::uint64_t seed);

struct FilterBank {
  int k = kDefaultKernels;
  int kernel_side = pixelio::kReceptiveFieldSide;
  int pool_grid = kPoolGrid;
  float eps_cn = kDefaultEpsCn;
  ZcaTransform zca;
  std::vector<float> centroids;  // k x kernel_side^2, row-major, unit rows

  int receptive_dim() const { return kernel_side * kernel_side; }
  int descriptor_dim() const { return pool_grid * pool_grid * k; }
  friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

struct DictionaryOptions {
  int k = kDefaultKernels;
  int iters = kDefaultKmeansIters;
  std::uint64_t seed = 0;
  float eps_cn = kDefaultEpsCn;
  float eps_zca = kDefaultEpsZca;
};

// Contrast-normalizes and whitens 8x8 patches, then clusters them.
FilterBank learn_dictionary(std::span<const pixelio::Patch> patches, const DictionaryOptions& opts);

// Throws unless the bank is internally consistent (sizes, 8x8 kernels, 3x3 pooling).
void validate(const FilterBank& bank);

// f_k = max(0, mean(z) - z_k).
std::vector<double> triangle_activation(std::span<const double> distances);

using Descriptor = std::vector<float>;

// Encoder bound to one filter bank; caches the matrices the hot loop needs.
class Encoder {
 public:
  explicit Encoder(const FilterBank& bank);

  const FilterBank& bank() const { return bank_; }
  int descriptor_dim() const { return bank_.descriptor_dim(); }

  // Activations of one receptive field (kernel_side^2 raw pixels). A field
  // with zero variance carries no stroke evidence and yields all zeros.
  std::vector<float> encode_receptive_field(std::span<const float> pixels) const;

  Descriptor encode_patch(const pixelio::Patch& patch) const;

  // encode_patch over extract_strokeparts(img, step), computed by sharing the
  // receptive-field responses of overlapping windows.
  std::vector<Descriptor> encode_line(const pixelio::GrayImage& img, int step) const;

 private:
  // Activation map of a 32-row strip: columns [0, width - 7), 25 rows each,
  // stored as [column][row][k].
  std::vector<float> strip_activations(const float* pixels, std::size_t stride, int width) const;
  void activate_block(const RowMatrixF& fields, float* out) const;
  Descriptor pool_window(const std::vector<float>& map, int x0) const;

  FilterBank bank_;
  RowMatrixF whiten_t_;    // W^T
  Eigen::RowVectorXf mean_;
  RowMatrixF centroids_t_;  // C^T, dim x k
  Eigen::RowVectorXf centroid_sq_;
};

}  // namespace strokeid::encoder
