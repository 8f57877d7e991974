#include "oblimatch/scene.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "oblimatch/errors.hpp"
#include "oblimatch/random.hpp"

namespace oblimatch {

namespace {

using ordered_json = nlohmann::ordered_json;

bool inside(const Eigen::Vector2d& p, const std::array<int, 2>& size, double margin) {
  return p.x() >= margin && p.x() <= size[0] - 1 - margin &&
         p.y() >= margin && p.y() <= size[1] - 1 - margin;
}

bool separated(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& placed,
               double min_sep) {
  for (const auto& q : placed) {
    if ((p - q).norm() < min_sep) return false;
  }
  return true;
}

ordered_json intrinsics_to_json(const CameraIntrinsics& k) {
  return ordered_json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  return {j.at("fx").get<double>(), j.at("fy").get<double>(),
          j.at("cx").get<double>(), j.at("cy").get<double>()};
}

}  // namespace

std::vector<int> co_visible_indices(const ScenePair& scene) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(scene.points.size()); ++i) {
    if (scene.visible_a[i] && scene.visible_b[i]) idx.push_back(i);
  }
  return idx;
}

ScenePair synth_scene(const SceneConfig& config, std::uint64_t seed) {
  if (config.num_points < 8) {
    throw InfeasibleScene("need ≥ 8 co-visible points, config requests " +
                          std::to_string(config.num_points));
  }
  if (config.baseline <= 0.0) {
    throw InfeasibleScene("baseline must be positive");
  }

  Rng rng(seed);

  ScenePair scene;
  scene.image_size_a = config.image_size;
  scene.image_size_b = config.image_size;
  const double cx = (config.image_size[0] - 1) / 2.0;
  const double cy = (config.image_size[1] - 1) / 2.0;
  scene.intrinsics_a = {config.focal, config.focal, cx, cy};
  scene.intrinsics_b = scene.intrinsics_a;

  const Eigen::Vector3d axis = rng.unit_vector(3);
  const double angle = rng.uniform(0.0, config.max_rotation_deg) * std::numbers::pi / 180.0;
  scene.pose_ab.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  scene.pose_ab.translation = config.baseline * Eigen::Vector3d(rng.unit_vector(3));

  const auto& ka = scene.intrinsics_a;
  const auto& kb = scene.intrinsics_b;
  const Pose identity;

  for (int i = 0; i < config.num_points; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const double z = rng.uniform(config.depth_min, config.depth_max) * config.baseline;
      const double u = rng.uniform(config.border_margin_px,
                                   config.image_size[0] - 1 - config.border_margin_px);
      const double v = rng.uniform(config.border_margin_px,
                                   config.image_size[1] - 1 - config.border_margin_px);
      const Eigen::Vector3d point(z * (u - ka.cx) / ka.fx, z * (v - ka.cy) / ka.fy, z);

      const Eigen::Vector3d in_b = scene.pose_ab.rotation * point + scene.pose_ab.translation;
      if (in_b.z() < 0.1 * config.baseline) continue;
      const Eigen::Vector2d pb(kb.fx * in_b.x() / in_b.z() + kb.cx,
                               kb.fy * in_b.y() / in_b.z() + kb.cy);
      if (!inside(pb, scene.image_size_b, config.border_margin_px)) continue;

      const Eigen::Vector2d pa = project({point}, ka, identity)[0].pixel;
      if (!separated(pa, scene.pix_a, config.min_separation_px)) continue;
      if (!separated(pb, scene.pix_b, config.min_separation_px)) continue;

      scene.points.push_back(point);
      scene.pix_a.push_back(pa);
      scene.pix_b.push_back(pb);
      scene.visible_a.push_back(true);
      scene.visible_b.push_back(true);
      placed = true;
    }
    if (!placed) {
      throw InfeasibleScene("could not place point " + std::to_string(i) +
                            " within 1000 attempts");
    }
  }
  return scene;
}

void save_scene(const ScenePair& scene, const std::filesystem::path& path) {
  ordered_json j;
  j["intrinsics_a"] = intrinsics_to_json(scene.intrinsics_a);
  j["intrinsics_b"] = intrinsics_to_json(scene.intrinsics_b);
  ordered_json rot = ordered_json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(scene.pose_ab.rotation(r, c));
  j["rotation"] = rot;
  j["translation"] = {scene.pose_ab.translation.x(), scene.pose_ab.translation.y(),
                      scene.pose_ab.translation.z()};
  ordered_json pts = ordered_json::array();
  for (const auto& p : scene.points) pts.push_back({p.x(), p.y(), p.z()});
  j["points"] = pts;
  ordered_json pa = ordered_json::array(), pb = ordered_json::array();
  for (const auto& p : scene.pix_a) pa.push_back({p.x(), p.y()});
  for (const auto& p : scene.pix_b) pb.push_back({p.x(), p.y()});
  j["pix_a"] = pa;
  j["pix_b"] = pb;
  j["visible_a"] = scene.visible_a;
  j["visible_b"] = scene.visible_b;
  j["image_size_a"] = scene.image_size_a;
  j["image_size_b"] = scene.image_size_b;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

ScenePair load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open scene file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("scene file " + path.string() + ": " + e.what());
  }

  try {
    ScenePair scene;
    scene.intrinsics_a = intrinsics_from_json(j.at("intrinsics_a"));
    scene.intrinsics_b = intrinsics_from_json(j.at("intrinsics_b"));
    const auto rot = j.at("rotation");
    if (rot.size() != 9) throw Error("scene file " + path.string() + ": rotation needs 9 values");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) scene.pose_ab.rotation(r, c) = rot[3 * r + c].get<double>();
    const auto t = j.at("translation");
    scene.pose_ab.translation = {t.at(0).get<double>(), t.at(1).get<double>(),
                                 t.at(2).get<double>()};
    for (const auto& p : j.at("points")) {
      scene.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                                p.at(2).get<double>());
    }
    for (const auto& p : j.at("pix_a")) {
      scene.pix_a.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    for (const auto& p : j.at("pix_b")) {
      scene.pix_b.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    scene.visible_a = j.at("visible_a").get<std::vector<bool>>();
    scene.visible_b = j.at("visible_b").get<std::vector<bool>>();
    scene.image_size_a = {j.at("image_size_a").at(0).get<int>(),
                          j.at("image_size_a").at(1).get<int>()};
    scene.image_size_b = {j.at("image_size_b").at(0).get<int>(),
                          j.at("image_size_b").at(1).get<int>()};

    const std::size_t n = scene.points.size();
    if (scene.pix_a.size() != n || scene.pix_b.size() != n || scene.visible_a.size() != n ||
        scene.visible_b.size() != n) {
      throw Error("scene file " + path.string() + ": per-point arrays disagree in length");
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw Error("scene file " + path.string() + ": " + e.what());
  }
}

}  // namespace oblimatch
