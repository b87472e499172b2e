#include "encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "error.hpp"
#include "rng.hpp"

namespace strokeid::encoder {

namespace {

template <class T>
std::vector<double> normalize_impl(std::span<const T> v, double eps_cn) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (T x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (T x : v) var += (x - mean) * (x - mean);
  var /= n;
  const double scale = 1.0 / std::sqrt(var + eps_cn);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) * scale;
  return out;
}

constexpr int kStripRows = pixelio::kStrokePartSide - pixelio::kReceptiveFieldSide + 1;  // 25

// Pooling-cell bounds over the 25 response positions: 0..8, 9..16, 17..24.
constexpr int kCellStart[4] = {0, 9, 17, 25};

}  // namespace

std::vector<double> contrast_normalize(std::span<const float> v, double eps_cn) {
  require(!v.empty(), "contrast_normalize of empty vector");
  return normalize_impl(v, eps_cn);
}

std::vector<double> contrast_normalize(std::span<const double> v, double eps_cn) {
  require(!v.empty(), "contrast_normalize of empty vector");
  return normalize_impl(v, eps_cn);
}

ZcaTransform fit_zca(std::span<const std::vector<double>> patches, double eps_zca) {
  require(patches.size() >= 2, "fit_zca needs at least 2 patches");
  require(eps_zca >= 0.0, "eps_zca must be non-negative");
  const std::size_t dim = patches.front().size();
  require(dim >= 1, "fit_zca of empty vectors");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& p : patches) {
    require(p.size() == dim, "fit_zca patches differ in length");
    mean += Eigen::Map<const Eigen::VectorXd>(p.data(), dim);
  }
  mean /= static_cast<double>(patches.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd centred(dim);
  for (const auto& p : patches) {
    centred = Eigen::Map<const Eigen::VectorXd>(p.data(), dim) - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centred);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(patches.size());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) fail(ErrorKind::InvalidArgument, "ZCA eigendecomposition failed");
  Eigen::VectorXd scale(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double l = std::max(0.0, eig.eigenvalues()[i]) + eps_zca;
    // A null direction with no regularizer is dropped rather than inflated.
    scale[i] = l > 1e-12 ? 1.0 / std::sqrt(l) : 0.0;
  }
  const Eigen::MatrixXd& e = eig.eigenvectors();
  Eigen::MatrixXd w = e * scale.asDiagonal() * e.transpose();
  w = 0.5 * (w + w.transpose());

  ZcaTransform z;
  z.eps_zca = static_cast<float>(eps_zca);
  z.mean.resize(dim);
  z.matrix.resize(dim * dim);
  for (std::size_t i = 0; i < dim; ++i) {
    z.mean[i] = static_cast<float>(mean[i]);
    for (std::size_t j = 0; j < dim; ++j) z.matrix[i * dim + j] = static_cast<float>(w(i, j));
  }
  return z;
}

std::vector<double> apply_zca(const ZcaTransform& z, std::span<const double> v) {
  const std::size_t dim = z.mean.size();
  require(v.size() == dim, "apply_zca dimension mismatch");
  std::vector<double> centred(dim), out(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) centred[j] = v[j] - static_cast<double>(z.mean[j]);
  for (std::size_t i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) acc += static_cast<double>(z.matrix[i * dim + j]) * centred[j];
    out[i] = acc;
  }
  return out;
}

RowMatrixF spherical_kmeans(const RowMatrixF& data, int k, int iters, std::uint64_t seed) {
  const Eigen::Index n = data.rows();
  const Eigen::Index dim = data.cols();
  require(k >= 1, "k-means needs k >= 1");
  require(n >= k, "k-means needs at least k points (" + std::to_string(n) + " < " + std::to_string(k) + ")");
  require(iters >= 0, "k-means iteration count must be non-negative");

  auto unit = [dim](auto row) -> Eigen::RowVectorXf {
    const float norm = row.norm();
    if (norm > 0.0f) return row / norm;
    return Eigen::RowVectorXf::Unit(dim, 0);
  };

  // Initial centroids: k distinct data points, partial Fisher-Yates.
  Rng rng(seed);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  RowMatrixF centroids(k, dim);
  for (int c = 0; c < k; ++c) {
    auto j = c + static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n - c)));
    std::swap(order[c], order[j]);
    centroids.row(c) = unit(data.row(order[c]));
  }

  const Eigen::VectorXf sq_norm = data.rowwise().squaredNorm();
  std::vector<int> assign(n);
  std::vector<float> best_dot(n);
  RowMatrixF dots;
  for (int it = 0; it < iters; ++it) {
    dots.noalias() = data * centroids.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      float best = dots(i, 0);
      for (Eigen::Index c = 1; c < k; ++c) {
        if (dots(i, c) > best) {
          best = dots(i, c);
          arg = c;
        }
      }
      assign[i] = static_cast<int>(arg);
      best_dot[i] = best;
    }
    RowMatrixF sums = RowMatrixF::Zero(k, dim);
    for (Eigen::Index i = 0; i < n; ++i) sums.row(assign[i]) += data.row(i);

    std::vector<bool> used(n, false);
    for (int c = 0; c < k; ++c) {
      const float norm = sums.row(c).norm();
      if (norm > 0.0f) {
        centroids.row(c) = sums.row(c) / norm;
        continue;
      }
      // Empty (or degenerate) cluster: take the point farthest from its
      // centroid, |x|^2 - 2 x.c + |c|^2 with |c| = 1.
      Eigen::Index far = -1;
      float far_dist = -1.0f;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (used[i]) continue;
        const float d = sq_norm[i] - 2.0f * best_dot[i] + 1.0f;
        if (d > far_dist) {
          far_dist = d;
          far = i;
        }
      }
      used[far] = true;
      centroids.row(c) = unit(data.row(far));
    }
  }
  return centroids;
}

FilterBank learn_dictionary(std::span<const pixelio::Patch> patches, const DictionaryOptions& opts) {
  require(opts.k >= 1, "kernel count must be positive");
  require(patches.size() >= static_cast<std::size_t>(opts.k),
          "dictionary learning needs at least K patches (" + std::to_string(patches.size()) + " < " +
              std::to_string(opts.k) + ")");
  const int side = pixelio::kReceptiveFieldSide;
  const int dim = side * side;
  std::vector<std::vector<double>> normalized;
  normalized.reserve(patches.size());
  for (const auto& p : patches) {
    require(p.side == side && p.values.size() == static_cast<std::size_t>(dim),
            "dictionary patches must be 8x8");
    normalized.push_back(contrast_normalize(std::span<const float>(p.values), opts.eps_cn));
  }
  FilterBank bank;
  bank.k = opts.k;
  bank.kernel_side = side;
  bank.pool_grid = kPoolGrid;
  bank.eps_cn = opts.eps_cn;
  bank.zca = fit_zca(normalized, opts.eps_zca);

  RowMatrixF whitened(static_cast<Eigen::Index>(normalized.size()), dim);
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const auto w = apply_zca(bank.zca, normalized[i]);
    for (int j = 0; j < dim; ++j) whitened(static_cast<Eigen::Index>(i), j) = static_cast<float>(w[j]);
  }
  const RowMatrixF centroids = spherical_kmeans(whitened, opts.k, opts.iters, opts.seed);
  bank.centroids.assign(centroids.data(), centroids.data() + centroids.size());
  return bank;
}

void validate(const FilterBank& bank) {
  auto bad = [](const std::string& what) { fail(ErrorKind::Format, "invalid filter bank: " + what); };
  if (bank.k < 1) bad("kernel count must be positive");
  if (bank.kernel_side != pixelio::kReceptiveFieldSide) bad("kernel side must be 8");
  if (bank.pool_grid != kPoolGrid) bad("pooling grid must be 3");
  const auto dim = static_cast<std::size_t>(bank.receptive_dim());
  if (bank.zca.mean.size() != dim || bank.zca.matrix.size() != dim * dim) bad("ZCA size mismatch");
  if (bank.centroids.size() != dim * static_cast<std::size_t>(bank.k)) bad("centroid size mismatch");
  if (!(bank.eps_cn >= 0.0f)) bad("eps_cn must be non-negative");
}

std::vector<double> triangle_activation(std::span<const double> distances) {
  require(!distances.empty(), "triangle activation of empty distance vector");
  const double mu = std::accumulate(distances.begin(), distances.end(), 0.0) / distances.size();
  std::vector<double> f(distances.size());
  for (std::size_t k = 0; k < distances.size(); ++k) f[k] = std::max(0.0, mu - distances[k]);
  return f;
}

Encoder::Encoder(const FilterBank& bank) : bank_(bank) {
  validate(bank_);
  const int dim = bank_.receptive_dim();
  whiten_t_ = Eigen::Map<const RowMatrixF>(bank_.zca.matrix.data(), dim, dim).transpose();
  mean_ = Eigen::Map<const Eigen::RowVectorXf>(bank_.zca.mean.data(), dim);
  const Eigen::Map<const RowMatrixF> c(bank_.centroids.data(), bank_.k, dim);
  centroids_t_ = c.transpose();
  centroid_sq_ = c.rowwise().squaredNorm().transpose();
}

// Rows of `fields` are raw receptive fields; writes rows x k activations.
void Encoder::activate_block(const RowMatrixF& fields, float* out) const {
  const Eigen::Index rows = fields.rows();
  const int dim = bank_.receptive_dim();
  const int k = bank_.k;
  RowMatrixF normalized(rows, dim);
  std::vector<bool> flat(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto cn = contrast_normalize(std::span<const float>(fields.row(r).data(), dim), bank_.eps_cn);
    bool zero = true;
    for (int j = 0; j < dim; ++j) {
      normalized(r, j) = static_cast<float>(cn[j]);
      zero = zero && cn[j] == 0.0;
    }
    flat[r] = zero;
  }
  normalized.rowwise() -= mean_;
  const RowMatrixF white = normalized * whiten_t_;
  const RowMatrixF dots = white * centroids_t_;
  const Eigen::VectorXf white_sq = white.rowwise().squaredNorm();
  std::vector<float> z(k);
  for (Eigen::Index r = 0; r < rows; ++r) {
    float* f = out + r * k;
    if (flat[r]) {
      std::fill_n(f, k, 0.0f);
      continue;
    }
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
      z[c] = std::sqrt(std::max(0.0f, white_sq[r] - 2.0f * dots(r, c) + centroid_sq_[c]));
      sum += z[c];
    }
    const float mu = static_cast<float>(sum / k);
    for (int c = 0; c < k; ++c) f[c] = std::max(0.0f, mu - z[c]);
  }
}

std::vector<float> Encoder::encode_receptive_field(std::span<const float> pixels) const {
  const int dim = bank_.receptive_dim();
  require(pixels.size() == static_cast<std::size_t>(dim), "receptive field must be 8x8");
  RowMatrixF fields = Eigen::Map<const RowMatrixF>(pixels.data(), 1, dim);
  std::vector<float> out(bank_.k);
  activate_block(fields, out.data());
  return out;
}

std::vector<float> Encoder::strip_activations(const float* pixels, std::size_t stride, int width) const {
  const int side = bank_.kernel_side;
  const int dim = bank_.receptive_dim();
  const int k = bank_.k;
  const int columns = width - side + 1;
  std::vector<float> map(static_cast<std::size_t>(columns) * kStripRows * k);
  RowMatrixF fields(kStripRows, dim);
  // Every column is a fixed 25-row block so a window's responses are
  // bitwise identical whether it is encoded alone or as part of a line.
  for (int x = 0; x < columns; ++x) {
    for (int y = 0; y < kStripRows; ++y) {
      for (int r = 0; r < side; ++r) {
        const float* src = pixels + (y + r) * stride + x;
        std::copy_n(src, side, fields.row(y).data() + r * side);
      }
    }
    activate_block(fields, map.data() + static_cast<std::size_t>(x) * kStripRows * k);
  }
  return map;
}

Descriptor Encoder::pool_window(const std::vector<float>& map, int x0) const {
  const int k = bank_.k;
  Descriptor d(static_cast<std::size_t>(bank_.descriptor_dim()), 0.0f);
  std::vector<double> acc(k);
  for (int cy = 0; cy < kPoolGrid; ++cy) {
    for (int cx = 0; cx < kPoolGrid; ++cx) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int x = kCellStart[cx]; x < kCellStart[cx + 1]; ++x) {
        for (int y = kCellStart[cy]; y < kCellStart[cy + 1]; ++y) {
          const float* f = map.data() + (static_cast<std::size_t>(x0 + x) * kStripRows + y) * k;
          for (int c = 0; c < k; ++c) acc[c] += f[c];
        }
      }
      const double cells = static_cast<double>(kCellStart[cx + 1] - kCellStart[cx]) *
                           (kCellStart[cy + 1] - kCellStart[cy]);
      float* out = d.data() + static_cast<std::size_t>(cy * kPoolGrid + cx) * k;
      for (int c = 0; c < k; ++c) out[c] = static_cast<float>(acc[c] / cells);
    }
  }
  return d;
}

Descriptor Encoder::encode_patch(const pixelio::Patch& patch) const {
  constexpr int side = pixelio::kStrokePartSide;
  require(patch.side == side && patch.values.size() == static_cast<std::size_t>(side * side),
          "stroke-part must be 32x32");
  return pool_window(strip_activations(patch.values.data(), side, side), 0);
}

std::vector<Descriptor> Encoder::encode_line(const pixelio::GrayImage& img, int step) const {
  constexpr int side = pixelio::kStrokePartSide;
  require(step >= 1, "sliding-window step must be positive");
  require(img.height() == pixelio::kLineHeight, "stroke-part extraction needs a 64-px line");
  require(img.width() >= side, "line narrower than 32 px; resize_to_height pads it");
  std::vector<Descriptor> out;
  out.reserve(pixelio::strokepart_count(img.width(), step));
  for (int y0 = 0; y0 + side <= img.height(); y0 += side) {
    const auto map = strip_activations(img.row(y0), img.width(), img.width());
    for (int x0 = 0; x0 + side <= img.width(); x0 += step) out.push_back(pool_window(map, x0));
  }
  return out;
}

}  // namespace strokeid::encoder
