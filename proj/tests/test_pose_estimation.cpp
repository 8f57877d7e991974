#include "oblimatch/pose_estimation.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "oblimatch/errors.hpp"
#include "oblimatch/random.hpp"
#include "oblimatch/scene.hpp"

namespace oblimatch {
namespace {

double essential_deviation(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d an = a / a.norm();
  const Eigen::Matrix3d bn = b / b.norm();
  return std::min((an - bn).norm(), (an + bn).norm());
}

struct Correspondences {
  std::vector<Eigen::Vector2d> norm_a, norm_b;
};

Correspondences normalized_correspondences(const ScenePair& scene) {
  Correspondences out;
  for (int i : co_visible_indices(scene)) {
    out.norm_a.push_back(normalize_pixel(scene.pix_a[i], scene.intrinsics_a));
    out.norm_b.push_back(normalize_pixel(scene.pix_b[i], scene.intrinsics_b));
  }
  return out;
}

TEST(EightPoint, RecoversGroundTruthEssential) {
  SceneConfig config;
  config.num_points = 20;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ScenePair scene = synth_scene(config, seed);
    const Correspondences corr = normalized_correspondences(scene);
    const EssentialMatrix estimated = eight_point(corr.norm_a, corr.norm_b);
    const EssentialMatrix gt = essential_from_pose(scene.pose_ab);
    EXPECT_LT(essential_deviation(estimated.m, gt.m), 1e-6);
  }
}

TEST(EightPoint, ProjectedSingularValuesAreOneOneZero) {
  SceneConfig config;
  config.num_points = 30;
  const ScenePair scene = synth_scene(config, 4);
  const Correspondences corr = normalized_correspondences(scene);
  const EssentialMatrix e = eight_point(corr.norm_a, corr.norm_b);
  const Eigen::Vector3d sv =
      Eigen::JacobiSVD<Eigen::Matrix3d>(e.m).singularValues();
  EXPECT_LT(std::abs(sv[0] - sv[1]) / sv[0], 1e-6);
  EXPECT_LT(sv[2] / sv[0], 1e-6);
}

TEST(EightPoint, CollinearPointsAreDegenerate) {
  // Eight 3D points on one line, seen by two cameras.
  Pose pose;
  pose.rotation =
      Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitY()).toRotationMatrix();
  pose.translation = {1.0, 0.0, 0.0};
  std::vector<Eigen::Vector2d> na, nb;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d p = Eigen::Vector3d(0.2, -0.1, 5.0) + i * Eigen::Vector3d(0.1, 0.05, 0.4);
    const Eigen::Vector3d q = pose.rotation * p + pose.translation;
    na.emplace_back(p.x() / p.z(), p.y() / p.z());
    nb.emplace_back(q.x() / q.z(), q.y() / q.z());
  }
  EXPECT_THROW(eight_point(na, nb), DegenerateConfiguration);
}

TEST(EightPoint, FewerThanEightThrows) {
  std::vector<Eigen::Vector2d> pts(7, Eigen::Vector2d::Zero());
  EXPECT_THROW(eight_point(pts, pts), InsufficientMatches);
}

TEST(EightPoint, EquivariantUnderPreRotation) {
  SceneConfig config;
  config.num_points = 20;
  const ScenePair scene = synth_scene(config, 6);
  const Correspondences corr = normalized_correspondences(scene);
  const EssentialMatrix base = eight_point(corr.norm_a, corr.norm_b);

  Rng rng(7);
  const Eigen::Matrix3d ra =
      Eigen::AngleAxisd(0.08, Eigen::Vector3d(rng.unit_vector(3))).toRotationMatrix();
  const Eigen::Matrix3d rb =
      Eigen::AngleAxisd(0.06, Eigen::Vector3d(rng.unit_vector(3))).toRotationMatrix();

  Correspondences rotated;
  for (std::size_t i = 0; i < corr.norm_a.size(); ++i) {
    const Eigen::Vector3d xa = ra * Eigen::Vector3d(corr.norm_a[i].x(), corr.norm_a[i].y(), 1.0);
    const Eigen::Vector3d xb = rb * Eigen::Vector3d(corr.norm_b[i].x(), corr.norm_b[i].y(), 1.0);
    ASSERT_GT(xa.z(), 0.1);
    ASSERT_GT(xb.z(), 0.1);
    rotated.norm_a.emplace_back(xa.x() / xa.z(), xa.y() / xa.z());
    rotated.norm_b.emplace_back(xb.x() / xb.z(), xb.y() / xb.z());
  }
  const EssentialMatrix rotated_fit = eight_point(rotated.norm_a, rotated.norm_b);
  const Eigen::Matrix3d expected = rb * base.m * ra.transpose();
  EXPECT_LT(essential_deviation(rotated_fit.m, expected), 1e-6);
}

TEST(Triangulate, ExactProjectionsReconstructThePoint) {
  SceneConfig config;
  config.num_points = 30;
  const ScenePair scene = synth_scene(config, 9);
  for (int i : co_visible_indices(scene)) {
    const Eigen::Vector2d na = normalize_pixel(scene.pix_a[i], scene.intrinsics_a);
    const Eigen::Vector2d nb = normalize_pixel(scene.pix_b[i], scene.intrinsics_b);
    const Triangulation tri = triangulate(na, nb, scene.pose_ab);
    EXPECT_LT((tri.point - scene.points[static_cast<std::size_t>(i)]).norm(), 1e-9);
    EXPECT_GT(tri.depth_a, 0.0);
    EXPECT_GT(tri.depth_b, 0.0);
  }
}

TEST(Triangulate, PureRotationRaysAreParallel) {
  Pose pose;
  pose.rotation = Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitY()).toRotationMatrix();
  // The corresponding bearing of (0.1, -0.2) under a pure rotation.
  const Eigen::Vector3d xb = pose.rotation * Eigen::Vector3d(0.1, -0.2, 1.0);
  EXPECT_THROW(
      triangulate({0.1, -0.2}, {xb.x() / xb.z(), xb.y() / xb.z()}, pose), ParallelRays);
}

TEST(Triangulate, DepthSignsMatchGroundTruth) {
  SceneConfig config;
  config.num_points = 40;
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const ScenePair scene = synth_scene(config, seed);
    for (int i : co_visible_indices(scene)) {
      const Eigen::Vector2d na = normalize_pixel(scene.pix_a[i], scene.intrinsics_a);
      const Eigen::Vector2d nb = normalize_pixel(scene.pix_b[i], scene.intrinsics_b);
      const Triangulation tri = triangulate(na, nb, scene.pose_ab);
      const double gt_depth_a = scene.points[static_cast<std::size_t>(i)].z();
      const double gt_depth_b =
          (scene.pose_ab.rotation * scene.points[static_cast<std::size_t>(i)] +
           scene.pose_ab.translation)
              .z();
      EXPECT_EQ(tri.depth_a > 0.0, gt_depth_a > 0.0);
      EXPECT_EQ(tri.depth_b > 0.0, gt_depth_b > 0.0);
    }
  }
}

// Standalone decomposition: candidates are (UWVᵀ, ±u3) and (UWᵀVᵀ, ±u3).
std::vector<Pose> reference_decompose(const Eigen::Matrix3d& e) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0) u = -u;
  if (v.determinant() < 0) v = -v;
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Vector3d t = u.col(2);
  return {{u * w * v.transpose(), t},
          {u * w * v.transpose(), -t},
          {u * w.transpose() * v.transpose(), t},
          {u * w.transpose() * v.transpose(), -t}};
}

TEST(RecoverPose, GroundTruthPoseIsAmongTheFourCandidates) {
  SceneConfig config;
  config.num_points = 15;
  const ScenePair scene = synth_scene(config, 13);
  const EssentialMatrix e = essential_from_pose(scene.pose_ab);
  const std::vector<Pose> candidates = reference_decompose(e.m);

  Pose gt_unit = scene.pose_ab;
  gt_unit.translation.normalize();
  int hits = 0;
  for (const auto& c : candidates) {
    EXPECT_TRUE(is_rotation(c.rotation, 1e-9));
    if ((c.rotation - gt_unit.rotation).norm() < 1e-9 &&
        (c.translation - gt_unit.translation).norm() < 1e-9) {
      ++hits;
    }
  }
  EXPECT_EQ(hits, 1);
}

TEST(RecoverPose, CheiralitySelectsGroundTruth) {
  SceneConfig config;
  config.num_points = 25;
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    const ScenePair scene = synth_scene(config, seed);
    const EssentialMatrix e = essential_from_pose(scene.pose_ab);
    std::vector<Eigen::Vector2d> pix_a, pix_b;
    for (int i : co_visible_indices(scene)) {
      pix_a.push_back(scene.pix_a[i]);
      pix_b.push_back(scene.pix_b[i]);
    }
    const Pose pose = recover_pose(e, pix_a, pix_b, scene.intrinsics_a, scene.intrinsics_b);
    EXPECT_NEAR(pose.translation.norm(), 1.0, 1e-9);
    EXPECT_LT(rotation_angle_deg(pose.rotation * scene.pose_ab.rotation.transpose()), 1e-6);
    const Eigen::Vector3d t_gt = scene.pose_ab.translation.normalized();
    EXPECT_LT((pose.translation - t_gt).norm(), 1e-6);  // resolved to +t, not -t
  }
}

TEST(RecoverPose, SingleCorrespondenceWithUniqueCheirality) {
  SceneConfig config;
  config.num_points = 10;
  const ScenePair scene = synth_scene(config, 41);
  const EssentialMatrix e = essential_from_pose(scene.pose_ab);
  const int i = co_visible_indices(scene)[0];
  const Pose pose = recover_pose(e, {scene.pix_a[i]}, {scene.pix_b[i]}, scene.intrinsics_a,
                                 scene.intrinsics_b);
  EXPECT_LT(rotation_angle_deg(pose.rotation * scene.pose_ab.rotation.transpose()), 1e-6);
}

TEST(RecoverPose, ExactTieThrowsCheiralityAmbiguous) {
  Pose pose;
  pose.translation = {1.0, 0.0, 0.0};
  const EssentialMatrix e = essential_from_pose(pose);
  const CameraIntrinsics k{1.0, 1.0, 0.0, 0.0};
  // A correspondence on the epipolar axis triangulates to parallel rays under
  // every candidate, so all four counts tie at zero.
  EXPECT_THROW(recover_pose(e, {{0.0, 0.0}}, {{0.0, 0.0}}, k, k), CheiralityAmbiguous);
}

MatchList identity_matches(std::size_t n) {
  MatchList matches;
  for (std::size_t i = 0; i < n; ++i) {
    matches.push_back({static_cast<int>(i), static_cast<int>(i), 1.0});
  }
  return matches;
}

struct RansacScene {
  KeypointSet kps_a, kps_b;
  ScenePair scene;
};

RansacScene ransac_inputs(std::uint64_t seed, int points, double focal, double pixel_noise,
                          double outlier_fraction) {
  SceneConfig config;
  config.num_points = points;
  config.image_size = {640, 480};
  config.focal = focal;
  RansacScene out;
  out.scene = synth_scene(config, seed);
  auto [a, b] = co_visible_keypoints(out.scene);
  Rng rng(mix_seed(seed, 777));
  if (pixel_noise > 0.0) {
    for (auto& p : a.coords) p += pixel_noise * Eigen::Vector2d(rng.normal(), rng.normal());
    for (auto& p : b.coords) p += pixel_noise * Eigen::Vector2d(rng.normal(), rng.normal());
  }
  if (outlier_fraction > 0.0) {
    // Planted wrong pairs: rewire the first k keypoints of B to random ones.
    const int n = static_cast<int>(b.coords.size());
    const int k = static_cast<int>(outlier_fraction * n);
    for (int i = 0; i < k; ++i) {
      int j = rng.uniform_int(n);
      while (j == i) j = rng.uniform_int(n);
      b.coords[static_cast<std::size_t>(i)] = b.coords[static_cast<std::size_t>(j)];
    }
  }
  out.kps_a = std::move(a);
  out.kps_b = std::move(b);
  return out;
}

TEST(RansacEssential, ExactInliersGiveSubCentidegreePose) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RansacScene in = ransac_inputs(seed, 200, 800.0, 0.0, 0.0);
    RansacConfig config;
    config.seed = seed;
    const PoseEstimate estimate =
        ransac_essential(identity_matches(in.kps_a.coords.size()), in.kps_a, in.kps_b,
                         in.scene.intrinsics_a, in.scene.intrinsics_b, config);
    EXPECT_EQ(estimate.num_inliers, static_cast<int>(in.kps_a.coords.size()));
    EXPECT_LT(pose_error_deg(estimate.pose, in.scene.pose_ab), 0.01);
  }
}

TEST(RansacEssential, RobustToOutliersAndNoise) {
  int good = 0;
  const int trials = 20;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const RansacScene in = ransac_inputs(seed, 200, 800.0, 0.5, 0.3);
    RansacConfig config;
    config.seed = seed;
    try {
      const PoseEstimate estimate =
          ransac_essential(identity_matches(in.kps_a.coords.size()), in.kps_a, in.kps_b,
                           in.scene.intrinsics_a, in.scene.intrinsics_b, config);
      if (pose_error_deg(estimate.pose, in.scene.pose_ab) < 2.0) ++good;
    } catch (const Error&) {
    }
  }
  EXPECT_GE(good, trials - 1);
}

TEST(RansacEssential, SevenMatchesThrow) {
  const RansacScene in = ransac_inputs(3, 20, 800.0, 0.0, 0.0);
  RansacConfig config;
  EXPECT_THROW(ransac_essential(identity_matches(7), in.kps_a, in.kps_b, in.scene.intrinsics_a,
                                in.scene.intrinsics_b, config),
               InsufficientMatches);
}

TEST(RansacEssential, DeterministicGivenSeed) {
  const RansacScene in = ransac_inputs(5, 100, 800.0, 0.5, 0.2);
  RansacConfig config;
  config.seed = 12345;
  const auto run = [&] {
    return ransac_essential(identity_matches(in.kps_a.coords.size()), in.kps_a, in.kps_b,
                            in.scene.intrinsics_a, in.scene.intrinsics_b, config);
  };
  const PoseEstimate first = run();
  const PoseEstimate second = run();
  EXPECT_TRUE(first.pose.rotation == second.pose.rotation);
  EXPECT_TRUE(first.pose.translation == second.pose.translation);
  EXPECT_TRUE(first.essential.m == second.essential.m);
  EXPECT_EQ(first.inlier_mask, second.inlier_mask);
  EXPECT_EQ(first.num_inliers, second.num_inliers);
}

TEST(RansacEssential, ReportedInliersSatisfyThreshold) {
  const RansacScene in = ransac_inputs(8, 150, 800.0, 0.5, 0.3);
  RansacConfig config;
  config.seed = 9;
  const MatchList matches = identity_matches(in.kps_a.coords.size());
  const PoseEstimate estimate = ransac_essential(matches, in.kps_a, in.kps_b,
                                                 in.scene.intrinsics_a, in.scene.intrinsics_b,
                                                 config);
  const double mean_focal = 800.0;
  const double threshold = std::pow(config.inlier_threshold_px / mean_focal, 2.0);
  int count = 0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (!estimate.inlier_mask[i]) continue;
    ++count;
    const Eigen::Vector2d na = normalize_pixel(in.kps_a.coords[i], in.scene.intrinsics_a);
    const Eigen::Vector2d nb = normalize_pixel(in.kps_b.coords[i], in.scene.intrinsics_b);
    EXPECT_LT(sym_epipolar_distance(na, nb, estimate.essential), threshold);
  }
  EXPECT_EQ(count, estimate.num_inliers);
  EXPECT_NEAR(estimate.pose.translation.norm(), 1.0, 1e-9);
  EXPECT_TRUE(is_rotation(estimate.pose.rotation, 1e-9));
}

}  // namespace
}  // namespace oblimatch
