#include "oblimatch/geometry.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "oblimatch/errors.hpp"
#include "oblimatch/random.hpp"

namespace oblimatch {
namespace {

Eigen::Matrix3d random_rotation(Rng& rng) {
  const Eigen::Vector3d axis = rng.unit_vector(3);
  const double angle = rng.uniform(0.0, std::numbers::pi);
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// Straightforward scalar pinhole, kept free of Eigen expressions on purpose.
void reference_project(const double point[3], const double r[9], const double t[3], double fx,
                       double fy, double cx, double cy, double out[3]) {
  double q[3];
  for (int i = 0; i < 3; ++i) {
    q[i] = r[3 * i] * point[0] + r[3 * i + 1] * point[1] + r[3 * i + 2] * point[2] + t[i];
  }
  out[0] = fx * q[0] / q[2] + cx;
  out[1] = fy * q[1] / q[2] + cy;
  out[2] = q[2];
}

TEST(Project, OpticalAxisPoint) {
  const CameraIntrinsics k{100.0, 100.0, 0.0, 0.0};
  const auto out = project({{0.0, 0.0, 5.0}}, k, Pose{});
  EXPECT_DOUBLE_EQ(out[0].pixel.x(), 0.0);
  EXPECT_DOUBLE_EQ(out[0].pixel.y(), 0.0);
  EXPECT_DOUBLE_EQ(out[0].depth, 5.0);
}

TEST(Project, OffAxisPoint) {
  const CameraIntrinsics k{100.0, 100.0, 0.0, 0.0};
  const auto out = project({{1.0, 0.0, 5.0}}, k, Pose{});
  EXPECT_DOUBLE_EQ(out[0].pixel.x(), 20.0);
  EXPECT_DOUBLE_EQ(out[0].pixel.y(), 0.0);
  EXPECT_DOUBLE_EQ(out[0].depth, 5.0);
}

TEST(Project, MatchesReferenceImplementation) {
  Rng rng(11);
  const CameraIntrinsics k{320.0, 300.0, 161.5, 120.25};
  Pose pose;
  pose.rotation = random_rotation(rng);
  pose.translation = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};

  std::vector<Eigen::Vector3d> points;
  for (int i = 0; i < 100; ++i) {
    points.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(3, 10));
  }
  const auto out = project(points, k, pose);

  double r[9], t[3];
  for (int i = 0; i < 3; ++i) {
    t[i] = pose.translation[i];
    for (int j = 0; j < 3; ++j) r[3 * i + j] = pose.rotation(i, j);
  }
  double max_dev = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double p[3] = {points[i].x(), points[i].y(), points[i].z()};
    double expected[3];
    reference_project(p, r, t, k.fx, k.fy, k.cx, k.cy, expected);
    max_dev = std::max(max_dev, std::abs(out[i].pixel.x() - expected[0]));
    max_dev = std::max(max_dev, std::abs(out[i].pixel.y() - expected[1]));
    EXPECT_DOUBLE_EQ(out[i].depth, expected[2]);
  }
  EXPECT_LT(max_dev, 1e-9);
}

TEST(EssentialFromPose, UnitXTranslation) {
  Pose pose;
  pose.translation = {1.0, 0.0, 0.0};
  const EssentialMatrix e = essential_from_pose(pose);
  Eigen::Matrix3d expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  EXPECT_TRUE(e.m.isApprox(expected, 0.0));
}

TEST(EssentialFromPose, ZeroBaselineThrows) {
  Pose pose;  // identity, zero translation
  EXPECT_THROW(essential_from_pose(pose), ZeroBaseline);
}

TEST(EssentialFromPose, EpipolarResidualVanishesOnExactCorrespondences) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Pose pose;
    pose.rotation = Eigen::AngleAxisd(rng.uniform(0.0, 0.3), Eigen::Vector3d(rng.unit_vector(3)))
                        .toRotationMatrix();
    pose.translation = rng.unit_vector(3);
    const EssentialMatrix e = essential_from_pose(pose);

    for (int i = 0; i < 50; ++i) {
      const double z = rng.uniform(4.0, 12.0);
      const Eigen::Vector3d pa(rng.uniform(-0.4, 0.4) * z, rng.uniform(-0.4, 0.4) * z, z);
      const Eigen::Vector3d pb = pose.rotation * pa + pose.translation;
      if (pb.z() < 0.1) continue;
      const Eigen::Vector3d xa(pa.x() / pa.z(), pa.y() / pa.z(), 1.0);
      const Eigen::Vector3d xb(pb.x() / pb.z(), pb.y() / pb.z(), 1.0);
      EXPECT_LT(std::abs(xb.dot(e.m * xa)), 1e-9);
    }
  }
}

TEST(NormalizePixel, PrincipalPointMapsToOrigin) {
  const CameraIntrinsics k{520.0, 500.0, 319.5, 239.5};
  const Eigen::Vector2d n = normalize_pixel({319.5, 239.5}, k);
  EXPECT_DOUBLE_EQ(n.x(), 0.0);
  EXPECT_DOUBLE_EQ(n.y(), 0.0);
}

TEST(NormalizePixel, UnitFocalOffset) {
  const CameraIntrinsics k{520.0, 500.0, 319.5, 239.5};
  EXPECT_DOUBLE_EQ(normalize_pixel({319.5 + 520.0, 239.5}, k).x(), 1.0);
}

TEST(NormalizePixel, RoundTripsWithDenormalize) {
  const CameraIntrinsics k{520.0, 497.5, 319.5, 241.0};
  Rng rng(5);
  double max_dev = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector2d p(rng.uniform(0, 640), rng.uniform(0, 480));
    const Eigen::Vector2d back = denormalize_pixel(normalize_pixel(p, k), k);
    max_dev = std::max(max_dev, (back - p).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(max_dev, 1e-12);
}

TEST(NormalizePixel, ProjectionComposesToCameraRay) {
  const CameraIntrinsics k{420.0, 415.0, 320.0, 240.0};
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d p(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(2, 9));
    const auto projected = project({p}, k, Pose{});
    const Eigen::Vector2d n = normalize_pixel(projected[0].pixel, k);
    EXPECT_NEAR(n.x(), p.x() / p.z(), 1e-12);
    EXPECT_NEAR(n.y(), p.y() / p.z(), 1e-12);
  }
}

// Plain-arithmetic evaluation of the distance formula, used as the oracle.
double reference_sym_epipolar(const double e[9], double ax, double ay, double bx, double by) {
  const double la0 = e[0] * ax + e[1] * ay + e[2];
  const double la1 = e[3] * ax + e[4] * ay + e[5];
  const double la2 = e[6] * ax + e[7] * ay + e[8];
  const double residual = bx * la0 + by * la1 + la2;
  const double lb0 = e[0] * bx + e[3] * by + e[6];
  const double lb1 = e[1] * bx + e[4] * by + e[7];
  return residual * residual * (1.0 / (la0 * la0 + la1 * la1) + 1.0 / (lb0 * lb0 + lb1 * lb1));
}

TEST(SymEpipolarDistance, VanishesOnExactCorrespondence) {
  Pose pose;
  pose.rotation =
      Eigen::AngleAxisd(0.1, Eigen::Vector3d(0, 1, 0).normalized()).toRotationMatrix();
  pose.translation = {1.0, 0.2, 0.1};
  const EssentialMatrix e = essential_from_pose(pose);
  const Eigen::Vector3d pa(0.3, -0.2, 5.0);
  const Eigen::Vector3d pb = pose.rotation * pa + pose.translation;
  const Eigen::Vector2d na(pa.x() / pa.z(), pa.y() / pa.z());
  const Eigen::Vector2d nb(pb.x() / pb.z(), pb.y() / pb.z());
  EXPECT_LT(sym_epipolar_distance(na, nb, e), 1e-12);
}

TEST(SymEpipolarDistance, HandComputedValue) {
  Pose pose;
  pose.translation = {1.0, 0.0, 0.0};
  const EssentialMatrix e = essential_from_pose(pose);
  const double d = sym_epipolar_distance({0.0, 0.0}, {0.0, 0.1}, e);
  // E = skew((1,0,0)): residual -0.1, both epiline head norms 1.
  EXPECT_NEAR(d, 0.02, 1e-12);

  double raw[9];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) raw[3 * r + c] = e.m(r, c);
  EXPECT_NEAR(d, reference_sym_epipolar(raw, 0.0, 0.0, 0.0, 0.1), 1e-12);
}

TEST(SymEpipolarDistance, MatchesReferenceOnRandomInputs) {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = rng.uniform(-1, 1);
    const Eigen::Vector2d na(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Eigen::Vector2d nb(rng.uniform(-1, 1), rng.uniform(-1, 1));
    double raw[9];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) raw[3 * r + c] = m(r, c);
    const double expected = reference_sym_epipolar(raw, na.x(), na.y(), nb.x(), nb.y());
    EXPECT_NEAR(sym_epipolar_distance(na, nb, {m}), expected, 1e-12 * (1.0 + expected));
  }
}

TEST(SymEpipolarDistance, InvariantUnderScalingOfE) {
  Rng rng(37);
  Pose pose;
  pose.rotation = random_rotation(rng);
  pose.translation = rng.unit_vector(3);
  const EssentialMatrix e = essential_from_pose(pose);
  const Eigen::Vector2d na(0.12, -0.34);
  const Eigen::Vector2d nb(0.56, 0.07);
  const double d = sym_epipolar_distance(na, nb, e);
  for (double s : {7.0, -3.0, 0.001, 250.0}) {
    EXPECT_NEAR(sym_epipolar_distance(na, nb, {s * e.m}), d, 1e-12 * (1.0 + d));
  }
}

TEST(SymEpipolarDistance, DegenerateEpilineThrows) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(2, 2) = 1.0;  // both epilines reduce to (0, 0, 1) near the origin
  EXPECT_THROW(sym_epipolar_distance({0.0, 0.0}, {0.0, 0.0}, {m}), DegenerateEpiline);
}

TEST(PoseError, IdenticalPosesGiveExactZero) {
  Rng rng(41);
  Pose pose;
  pose.rotation = random_rotation(rng);
  pose.translation = {0.3, -0.2, 1.0};
  EXPECT_EQ(pose_error_deg(pose, pose), 0.0);
}

TEST(PoseError, PureRotationOffset) {
  Pose gt;
  gt.translation = {0.0, 0.0, 1.0};
  Pose est = gt;
  est.rotation =
      Eigen::AngleAxisd(10.0 * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  EXPECT_NEAR(pose_error_deg(est, gt), 10.0, 1e-9);
}

TEST(PoseError, AntipodalTranslationIsZero) {
  Pose gt;
  gt.translation = {0.2, 0.5, -0.3};
  Pose est = gt;
  est.translation = -gt.translation;
  EXPECT_EQ(pose_error_deg(est, gt), 0.0);
}

TEST(PoseError, SymmetricInArgumentOrder) {
  Rng rng(43);
  for (int i = 0; i < 20; ++i) {
    Pose a, b;
    a.rotation = random_rotation(rng);
    b.rotation = random_rotation(rng);
    a.translation = rng.unit_vector(3);
    b.translation = rng.unit_vector(3);
    EXPECT_NEAR(pose_error_deg(a, b), pose_error_deg(b, a), 1e-12);
  }
}

TEST(PoseError, ZeroTranslationThrows) {
  Pose gt;
  gt.translation = {0.0, 0.0, 1.0};
  Pose est;
  EXPECT_THROW(pose_error_deg(est, gt), UndefinedTranslationError);
  EXPECT_THROW(pose_error_deg(gt, est), UndefinedTranslationError);
}

TEST(RotationHelpers, SkewMatchesCrossProduct) {
  Rng rng(47);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d a = rng.unit_vector(3);
    const Eigen::Vector3d b = rng.unit_vector(3);
    EXPECT_TRUE((skew(a) * b).isApprox(a.cross(b), 1e-14));
  }
}

TEST(RotationHelpers, IsRotationRejectsScaledMatrix) {
  EXPECT_TRUE(is_rotation(Eigen::Matrix3d::Identity()));
  EXPECT_FALSE(is_rotation(2.0 * Eigen::Matrix3d::Identity()));
  Eigen::Matrix3d reflection = Eigen::Matrix3d::Identity();
  reflection(2, 2) = -1.0;
  EXPECT_FALSE(is_rotation(reflection));
}

}  // namespace
}  // namespace oblimatch
