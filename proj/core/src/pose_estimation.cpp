#include "oblimatch/pose_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "oblimatch/errors.hpp"
#include "oblimatch/random.hpp"

namespace oblimatch {

EssentialMatrix eight_point(const std::vector<Eigen::Vector2d>& corr_a,
                            const std::vector<Eigen::Vector2d>& corr_b) {
  const std::size_t n = corr_a.size();
  if (n < 8 || corr_b.size() != n) throw InsufficientMatches(std::min(n, corr_b.size()));

  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d xa(corr_a[i].x(), corr_a[i].y(), 1.0);
    const Eigen::Vector3d xb(corr_b[i].x(), corr_b[i].y(), 1.0);
    // Row holds the coefficients of x_bᵀ E x_a = 0 for row-major E.
    Eigen::Index col = 0;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) design(static_cast<Eigen::Index>(i), col++) = xb[r] * xa[c];
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[7] <= 1e-9 * sv[0]) throw DegenerateConfiguration();

  const Eigen::VectorXd e = svd.matrixV().col(8);
  Eigen::Matrix3d raw;
  raw << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];

  Eigen::JacobiSVD<Eigen::Matrix3d> esvd(raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double sigma = (esvd.singularValues()[0] + esvd.singularValues()[1]) / 2.0;
  const Eigen::Vector3d projected(sigma, sigma, 0.0);
  return {esvd.matrixU() * projected.asDiagonal() * esvd.matrixV().transpose()};
}

Triangulation triangulate(const Eigen::Vector2d& norm_a, const Eigen::Vector2d& norm_b,
                          const Pose& pose) {
  const Eigen::Vector3d dir_a(norm_a.x(), norm_a.y(), 1.0);
  const Eigen::Vector3d dir_b_in_a =
      pose.rotation.transpose() * Eigen::Vector3d(norm_b.x(), norm_b.y(), 1.0);
  if (dir_a.cross(dir_b_in_a).norm() < 1e-12 * dir_a.norm() * dir_b_in_a.norm()) {
    throw ParallelRays();
  }

  Eigen::Matrix<double, 3, 4> pa = Eigen::Matrix<double, 3, 4>::Zero();
  pa.leftCols<3>() = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> pb;
  pb.leftCols<3>() = pose.rotation;
  pb.col(3) = pose.translation;

  Eigen::Matrix4d design;
  design.row(0) = norm_a.x() * pa.row(2) - pa.row(0);
  design.row(1) = norm_a.y() * pa.row(2) - pa.row(1);
  design.row(2) = norm_b.x() * pb.row(2) - pb.row(0);
  design.row(3) = norm_b.y() * pb.row(2) - pb.row(1);

  Eigen::JacobiSVD<Eigen::Matrix4d> svd(design, Eigen::ComputeFullV);
  const Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h[3]) < 1e-15) throw ParallelRays();

  Triangulation out;
  out.point = h.head<3>() / h[3];
  out.depth_a = out.point.z();
  out.depth_b = (pose.rotation * out.point + pose.translation).z();
  return out;
}

Pose recover_pose(const EssentialMatrix& essential, const std::vector<Eigen::Vector2d>& pix_a,
                  const std::vector<Eigen::Vector2d>& pix_b, const CameraIntrinsics& k_a,
                  const CameraIntrinsics& k_b) {
  if (pix_a.empty() || pix_a.size() != pix_b.size()) {
    throw InsufficientMatches(std::min(pix_a.size(), pix_b.size()));
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(essential.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0) u = -u;
  if (v.determinant() < 0) v = -v;
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;

  const Eigen::Matrix3d r1 = u * w * v.transpose();
  const Eigen::Matrix3d r2 = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2);

  const Pose candidates[4] = {{r1, t}, {r1, -t}, {r2, t}, {r2, -t}};

  std::vector<Eigen::Vector2d> na(pix_a.size()), nb(pix_b.size());
  for (std::size_t i = 0; i < pix_a.size(); ++i) {
    na[i] = normalize_pixel(pix_a[i], k_a);
    nb[i] = normalize_pixel(pix_b[i], k_b);
  }

  int counts[4] = {0, 0, 0, 0};
  for (int c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < na.size(); ++i) {
      try {
        const Triangulation tri = triangulate(na[i], nb[i], candidates[c]);
        if (tri.depth_a > 0.0 && tri.depth_b > 0.0) ++counts[c];
      } catch (const ParallelRays&) {
      }
    }
  }

  int best = 0;
  for (int c = 1; c < 4; ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  int runner_up = best == 0 ? 1 : 0;
  for (int c = 0; c < 4; ++c) {
    if (c != best && counts[c] > counts[runner_up]) runner_up = c;
  }
  if (counts[best] == counts[runner_up]) throw CheiralityAmbiguous();

  Pose pose = candidates[best];
  pose.translation.normalize();
  return pose;
}

namespace {

// Distinct index sample via partial Fisher-Yates on a scratch vector.
void sample_indices(Rng& rng, std::vector<int>& scratch, int k, std::vector<int>& out) {
  const int n = static_cast<int>(scratch.size());
  out.clear();
  for (int i = 0; i < k; ++i) {
    const int j = i + rng.uniform_int(n - i);
    std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(j)]);
    out.push_back(scratch[static_cast<std::size_t>(i)]);
  }
}

int count_inliers(const EssentialMatrix& e, const std::vector<Eigen::Vector2d>& na,
                  const std::vector<Eigen::Vector2d>& nb, double threshold,
                  std::vector<bool>* mask) {
  int count = 0;
  for (std::size_t i = 0; i < na.size(); ++i) {
    bool inlier = false;
    try {
      inlier = sym_epipolar_distance(na[i], nb[i], e) < threshold;
    } catch (const DegenerateEpiline&) {
    }
    if (mask) (*mask)[i] = inlier;
    if (inlier) ++count;
  }
  return count;
}

int adaptive_iteration_bound(double inlier_ratio, double confidence, int max_iters) {
  if (inlier_ratio <= 0.0) return max_iters;
  const double w8 = std::pow(inlier_ratio, 8.0);
  if (w8 >= 1.0) return 1;
  const double denom = std::log1p(-w8);
  if (denom >= 0.0) return max_iters;
  const double bound = std::log1p(-confidence) / denom;
  if (!(bound < static_cast<double>(max_iters))) return max_iters;
  return std::max(1, static_cast<int>(std::ceil(bound)));
}

}  // namespace

PoseEstimate ransac_essential(const MatchList& matches, const KeypointSet& kps_a,
                              const KeypointSet& kps_b, const CameraIntrinsics& k_a,
                              const CameraIntrinsics& k_b, const RansacConfig& config) {
  const std::size_t n = matches.size();
  if (n < 8) throw InsufficientMatches(n);

  std::vector<Eigen::Vector2d> pix_a(n), pix_b(n), na(n), nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    pix_a[i] = kps_a.coords[static_cast<std::size_t>(matches[i].index_a)];
    pix_b[i] = kps_b.coords[static_cast<std::size_t>(matches[i].index_b)];
    na[i] = normalize_pixel(pix_a[i], k_a);
    nb[i] = normalize_pixel(pix_b[i], k_b);
  }

  const double mean_focal = (k_a.fx + k_a.fy + k_b.fx + k_b.fy) / 4.0;
  const double threshold = std::pow(config.inlier_threshold_px / mean_focal, 2.0);

  Rng rng(config.seed);
  std::vector<int> scratch(n);
  std::iota(scratch.begin(), scratch.end(), 0);
  std::vector<int> sample;
  std::vector<Eigen::Vector2d> sample_a(8), sample_b(8);

  bool have_model = false;
  EssentialMatrix best_model;
  int best_count = -1;
  int required = config.max_iters;

  for (int it = 0; it < required; ++it) {
    sample_indices(rng, scratch, 8, sample);
    for (int s = 0; s < 8; ++s) {
      sample_a[static_cast<std::size_t>(s)] = na[static_cast<std::size_t>(sample[s])];
      sample_b[static_cast<std::size_t>(s)] = nb[static_cast<std::size_t>(sample[s])];
    }
    EssentialMatrix model;
    try {
      model = eight_point(sample_a, sample_b);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    const int count = count_inliers(model, na, nb, threshold, nullptr);
    if (count > best_count) {
      best_count = count;
      best_model = model;
      have_model = true;
      required = std::min(
          required, adaptive_iteration_bound(static_cast<double>(count) / static_cast<double>(n),
                                             config.confidence, config.max_iters));
    }
  }
  if (!have_model) throw NoModelFound();

  std::vector<bool> mask(n, false);
  best_count = count_inliers(best_model, na, nb, threshold, &mask);

  // Least-squares refit over the consensus set, iterated to a fixed point.
  // Minimal-sample consensus is a biased subset under measurement noise, so a
  // single refit can leave (or even shrink to) a skewed inlier set; repeated
  // refits re-expand it. A refit that shrinks the consensus is discarded.
  for (int round = 0; round < 10; ++round) {
    std::vector<Eigen::Vector2d> in_a, in_b;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) {
        in_a.push_back(na[i]);
        in_b.push_back(nb[i]);
      }
    }
    if (in_a.size() < 8) break;
    EssentialMatrix refit;
    try {
      refit = eight_point(in_a, in_b);
    } catch (const DegenerateConfiguration&) {
      break;
    }
    std::vector<bool> refit_mask(n, false);
    const int refit_count = count_inliers(refit, na, nb, threshold, &refit_mask);
    if (refit_count < best_count) break;
    const bool converged = refit_mask == mask;
    best_model = refit;
    mask = std::move(refit_mask);
    best_count = refit_count;
    if (converged) break;
  }
  if (best_count < 1) throw NoModelFound();

  std::vector<Eigen::Vector2d> inlier_pix_a, inlier_pix_b;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      inlier_pix_a.push_back(pix_a[i]);
      inlier_pix_b.push_back(pix_b[i]);
    }
  }

  PoseEstimate estimate;
  estimate.pose = recover_pose(best_model, inlier_pix_a, inlier_pix_b, k_a, k_b);
  estimate.essential = best_model;
  estimate.inlier_mask = std::move(mask);
  estimate.num_inliers = best_count;
  return estimate;
}

}  // namespace oblimatch
