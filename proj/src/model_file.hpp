#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "encoder.hpp"
#include "nbnn.hpp"

namespace strokeid::model {

inline constexpr char kMagic[4] = {'S', 'N', 'B', 'N'};
inline constexpr std::uint16_t kVersion = 1;

// Filter bank plus template store. On disk, little-endian throughout:
//   "SNBN" u16 version
//   f32 eps_cn, f32 eps_zca, u32 K, u32 kernel_side, u32 pool_grid,
//   f32 zca_mean[d], f32 zca_matrix[d*d], f32 centroids[K*d]   (d = side^2)
//   u32 classes, then per class: u32 label_bytes, label (UTF-8), u32 n,
//   f32 templates[n*D], f32 weights[n]                          (D = grid^2*K)
struct Model {
  std::uint16_t version = kVersion;
  encoder::FilterBank bank;
  nbnn::TemplateStore store;

  friend bool operator==(const Model&, const Model&) = default;
};

void validate(const Model& m);

std::vector<std::uint8_t> serialize(const Model& m);
Model deserialize(std::span<const std::uint8_t> bytes);

void save(const Model& m, const std::filesystem::path& path);
Model load(const std::filesystem::path& path);

}  // namespace strokeid::model
