#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "oblimatch/scene.hpp"

namespace oblimatch {

// Dense H×W×D feature field standing in for a backbone's output feature map.
// data holds height*width*dim floats in row-major (y, x, channel) order.
struct DescriptorGrid {
  int width = 0;
  int height = 0;
  int dim = 0;
  std::vector<float> data;

  static DescriptorGrid zeros(int width, int height, int dim);

  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * dim + c];
  }
  float& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * dim + c];
  }
};

struct KeypointSet {
  std::vector<Eigen::Vector2d> coords;             // pixel (x, y)
  std::optional<std::vector<double>> confidence;   // ignored in oblivious mode
  std::array<int, 2> image_size = {0, 0};          // (width, height)
};

// One unit-norm descriptor per keypoint, order preserved.
struct DescriptorSet {
  std::vector<Eigen::VectorXd> descs;
};

// Raw bilinear read at continuous coordinate (x, y); cell (i, j) holds the
// value at (x=j, y=i) and coordinates past the last lattice point clamp to
// the border cell. No normalization. Throws OutOfBounds if (x, y) is outside
// [0, width) × [0, height).
Eigen::VectorXd sample_bilinear(const DescriptorGrid& grid, double x, double y);

// The description function: bilinear sample per keypoint, then L2
// normalization. Throws OutOfBounds(i) for the first keypoint outside the
// grid and ZeroVector(i) when an interpolated vector has norm < 1e-12.
// Never reads kps.confidence.
DescriptorSet sample_descriptors(const DescriptorGrid& grid, const KeypointSet& kps);

// Ground-truth-backed grid pair: every co-visible point gets one random unit
// descriptor planted at its projection in both grids (perturbed by
// noise_sigma and renormalized, per image), with independent random unit
// vectors everywhere else. Deterministic given the seed. Requires dim ≥ 8.
std::pair<DescriptorGrid, DescriptorGrid> oracle_grids(const ScenePair& scene, int dim,
                                                       double noise_sigma, std::uint64_t seed);

// Keypoint sets for a scene's co-visible points, aligned so that index i in A
// corresponds to index i in B.
std::pair<KeypointSet, KeypointSet> co_visible_keypoints(const ScenePair& scene);

// "DGRD" container: magic, u32 height/width/dim (little endian), then
// height*width*dim little-endian f32 in (y, x, channel) order.
void save_grid(const DescriptorGrid& grid, const std::filesystem::path& path);
DescriptorGrid load_grid(const std::filesystem::path& path);

// Keypoint JSON: {"image_size": [w, h], "keypoints": [[x, y], ...],
// "confidence": [...]} with confidence optional.
void save_keypoints(const KeypointSet& kps, const std::filesystem::path& path);
KeypointSet load_keypoints(const std::filesystem::path& path);

}  // namespace oblimatch
