#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "oblimatch/geometry.hpp"

namespace oblimatch {

struct SceneConfig {
  int num_points = 100;
  std::array<int, 2> image_size = {160, 120};  // (width, height), both cameras
  double focal = 120.0;                        // fx = fy, principal point centered
  double baseline = 1.0;                       // ‖t‖ in scene units
  double max_rotation_deg = 10.0;
  double depth_min = 4.0;                      // camera-A depth bounds, baseline units
  double depth_max = 12.0;
  double min_separation_px = 4.0;              // between projections, both images
  double border_margin_px = 2.0;
};

// Synthetic two-view ground truth: a calibrated pair with known relative pose
// and 3D points sampled so that every point projects inside both images.
struct ScenePair {
  CameraIntrinsics intrinsics_a, intrinsics_b;
  Pose pose_ab;  // camera-B-from-camera-A
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector2d> pix_a, pix_b;
  std::vector<bool> visible_a, visible_b;
  std::array<int, 2> image_size_a = {0, 0};
  std::array<int, 2> image_size_b = {0, 0};
};

std::vector<int> co_visible_indices(const ScenePair& scene);

// Deterministic given the seed. Throws InfeasibleScene when the config asks
// for fewer than 8 co-visible points, the baseline is not positive, or a
// point cannot be placed within 1000 attempts.
ScenePair synth_scene(const SceneConfig& config, std::uint64_t seed);

void save_scene(const ScenePair& scene, const std::filesystem::path& path);
ScenePair load_scene(const std::filesystem::path& path);

}  // namespace oblimatch
