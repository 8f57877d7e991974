#pragma once

#include <vector>

#include <Eigen/Core>

namespace oblimatch {

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

// Rigid transform taking camera-A coordinates to camera-B coordinates:
// x_b = rotation * x_a + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

// 3x3 essential matrix, defined up to scale.
struct EssentialMatrix {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
};

struct Projection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double depth = 0.0;  // z in the camera frame; negative behind the camera
};

bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Rotation angle in degrees, via acos((trace - 1) / 2) with clamping.
double rotation_angle_deg(const Eigen::Matrix3d& r);

// Pinhole projection of pose-transformed points. Points behind the camera
// come back with negative depth; the caller decides what to do with them.
std::vector<Projection> project(const std::vector<Eigen::Vector3d>& points,
                                const CameraIntrinsics& k, const Pose& pose);

// E = [t]x R, unnormalized. Throws ZeroBaseline when ‖t‖ < 1e-12.
EssentialMatrix essential_from_pose(const Pose& pose);

Eigen::Vector2d normalize_pixel(const Eigen::Vector2d& p, const CameraIntrinsics& k);
Eigen::Vector2d denormalize_pixel(const Eigen::Vector2d& p, const CameraIntrinsics& k);

// Squared symmetric epipolar distance of a normalized correspondence
// (pa in image A, pb in image B):
//   d = (pb'ᵀ E pa')² · (1/‖(E pa')₁₂‖² + 1/‖(Eᵀ pb')₁₂‖²)
// with pa', pb' homogeneous. Invariant under scaling of E. Throws
// DegenerateEpiline when both epiline head norms vanish.
double sym_epipolar_distance(const Eigen::Vector2d& pa, const Eigen::Vector2d& pb,
                             const EssentialMatrix& e);

// Pose error in degrees: max of the rotation angle of R_est R_gtᵀ and the
// angle between translation directions. Translation is compared
// sign-invariantly since monocular scale and sign are undetermined.
double pose_error_deg(const Pose& est, const Pose& gt);

}  // namespace oblimatch
