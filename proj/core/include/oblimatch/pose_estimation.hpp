#pragma once

#include <cstdint>
#include <vector>

#include "oblimatch/geometry.hpp"
#include "oblimatch/matcher.hpp"

namespace oblimatch {

struct RansacConfig {
  int max_iters = 2000;
  double confidence = 0.99999;
  double inlier_threshold_px = 1.0;  // converted to (thr / mean focal)² internally
  std::uint64_t seed = 0;
};

struct PoseEstimate {
  Pose pose;  // translation normalized to unit length
  EssentialMatrix essential;
  std::vector<bool> inlier_mask;  // aligned with the input match list
  int num_inliers = 0;
};

// Least-squares essential matrix from ≥ 8 normalized correspondences: SVD
// nullspace of the 9-column design matrix, then projection onto the essential
// manifold (singular values (σ, σ, 0) with σ the mean of the top two).
// Throws DegenerateConfiguration when the design matrix has rank < 8.
EssentialMatrix eight_point(const std::vector<Eigen::Vector2d>& corr_a,
                            const std::vector<Eigen::Vector2d>& corr_b);

// Linear-DLT triangulation of a normalized correspondence under the given
// camera-B-from-camera-A pose; depths are reported in both camera frames.
struct Triangulation {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  double depth_a = 0.0;
  double depth_b = 0.0;
};
Triangulation triangulate(const Eigen::Vector2d& norm_a, const Eigen::Vector2d& norm_b,
                          const Pose& pose);

// Decomposes E into its four (R, t) candidates and picks the one with the
// most inlier points triangulating to positive depth in both views. Throws
// CheiralityAmbiguous on an exact tie of the top two candidates.
Pose recover_pose(const EssentialMatrix& essential, const std::vector<Eigen::Vector2d>& pix_a,
                  const std::vector<Eigen::Vector2d>& pix_b, const CameraIntrinsics& k_a,
                  const CameraIntrinsics& k_b);

// Seeded RANSAC over minimal 8-point samples, scored by symmetric epipolar
// distance against (inlier_threshold_px / f̄)² with f̄ the mean focal length
// of both cameras, with the standard adaptive iteration bound, followed by a
// least-squares refit on the consensus set and cheirality-resolved pose
// recovery. Deterministic given inputs and seed.
PoseEstimate ransac_essential(const MatchList& matches, const KeypointSet& kps_a,
                              const KeypointSet& kps_b, const CameraIntrinsics& k_a,
                              const CameraIntrinsics& k_b, const RansacConfig& config);

}  // namespace oblimatch
