#include "oblimatch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/LU>

#include "oblimatch/errors.hpp"

namespace oblimatch {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  const Eigen::Matrix3d rtr = r.transpose() * r;
  return (rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

double rotation_angle_deg(const Eigen::Matrix3d& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * kRadToDeg;
}

std::vector<Projection> project(const std::vector<Eigen::Vector3d>& points,
                                const CameraIntrinsics& k, const Pose& pose) {
  std::vector<Projection> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    const Eigen::Vector3d q = pose.rotation * p + pose.translation;
    Projection proj;
    proj.depth = q.z();
    proj.pixel = {k.fx * q.x() / q.z() + k.cx, k.fy * q.y() / q.z() + k.cy};
    out.push_back(proj);
  }
  return out;
}

EssentialMatrix essential_from_pose(const Pose& pose) {
  if (pose.translation.norm() < 1e-12) throw ZeroBaseline();
  return {skew(pose.translation) * pose.rotation};
}

Eigen::Vector2d normalize_pixel(const Eigen::Vector2d& p, const CameraIntrinsics& k) {
  return {(p.x() - k.cx) / k.fx, (p.y() - k.cy) / k.fy};
}

Eigen::Vector2d denormalize_pixel(const Eigen::Vector2d& p, const CameraIntrinsics& k) {
  return {p.x() * k.fx + k.cx, p.y() * k.fy + k.cy};
}

double sym_epipolar_distance(const Eigen::Vector2d& pa, const Eigen::Vector2d& pb,
                             const EssentialMatrix& e) {
  const Eigen::Vector3d xa(pa.x(), pa.y(), 1.0);
  const Eigen::Vector3d xb(pb.x(), pb.y(), 1.0);
  const Eigen::Vector3d line_b = e.m * xa;            // epiline of pa in image B
  const Eigen::Vector3d line_a = e.m.transpose() * xb;  // epiline of pb in image A
  const double residual = xb.dot(line_b);
  const double nb = line_b.head<2>().squaredNorm();
  const double na = line_a.head<2>().squaredNorm();
  if (na < 1e-15 && nb < 1e-15) throw DegenerateEpiline();
  double sum = 0.0;
  if (nb >= 1e-15) sum += 1.0 / nb;
  if (na >= 1e-15) sum += 1.0 / na;
  return residual * residual * sum;
}

double pose_error_deg(const Pose& est, const Pose& gt) {
  if (!is_rotation(est.rotation) || !is_rotation(gt.rotation)) {
    throw std::invalid_argument("pose_error_deg: rotation is not orthonormal");
  }
  const double tn_est = est.translation.norm();
  const double tn_gt = gt.translation.norm();
  if (tn_est < 1e-12 || tn_gt < 1e-12) throw UndefinedTranslationError();

  // Exact zero for exactly equal (or exactly antipodal) inputs, where the
  // trig round trip would otherwise leave ~1e-6 degree residue.
  const double rot_err = est.rotation == gt.rotation
                             ? 0.0
                             : rotation_angle_deg(est.rotation * gt.rotation.transpose());
  double trans_err = 0.0;
  if (est.translation != gt.translation && est.translation != (-gt.translation).eval()) {
    const double cosine =
        std::clamp(std::abs(est.translation.dot(gt.translation)) / (tn_est * tn_gt), 0.0, 1.0);
    trans_err = std::acos(cosine) * kRadToDeg;
  }
  return std::max(rot_err, trans_err);
}

}  // namespace oblimatch
