#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oblimatch/descriptor_field.hpp"
#include "oblimatch/errors.hpp"
#include "oblimatch/evaluation.hpp"
#include "oblimatch/matcher.hpp"
#include "oblimatch/random.hpp"
#include "oblimatch/scene.hpp"
#include "oblimatch/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum class LogLevel { kDebug = 0, kInfo, kWarn, kError, kOff };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("OBLIMATCH_LOG");
    if (!env) return LogLevel::kWarn;
    const std::string v(env);
    if (v == "debug") return LogLevel::kDebug;
    if (v == "info") return LogLevel::kInfo;
    if (v == "warn") return LogLevel::kWarn;
    if (v == "error") return LogLevel::kError;
    if (v == "off") return LogLevel::kOff;
    return LogLevel::kWarn;
  }();
  return level;
}

void log(LogLevel level, const std::string& msg) {
  if (level >= log_level()) std::cerr << "[oblimatch] " << msg << "\n";
}

std::string pair_tag(int i) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%03d", i);
  return buf;
}

void write_json_file(const ordered_json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw oblimatch::Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

ordered_json intrinsics_json(const oblimatch::CameraIntrinsics& k) {
  return ordered_json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
}

ordered_json pose_json(const oblimatch::Pose& pose) {
  ordered_json rot = ordered_json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation(r, c));
  return ordered_json{{"rotation", rot},
                      {"translation", {pose.translation.x(), pose.translation.y(),
                                       pose.translation.z()}}};
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  int pairs = 2;
  int points = 1024;
  double noise = 0.0;
  double baseline = 1.0;
  std::uint64_t seed = 0;
  int dim = 256;
  int width = 640;
  int height = 480;
  double focal = 600.0;
  double max_rotation_deg = 10.0;
  double min_sep = 4.0;
};

constexpr std::uint64_t kSceneSalt = 0x7363656eULL;
constexpr std::uint64_t kGridSalt = 0x67726964ULL;
constexpr std::uint64_t kConfSalt = 0x636f6e66ULL;

int run_synth(const SynthArgs& args) {
  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);

  oblimatch::SceneConfig config;
  config.num_points = args.points;
  config.image_size = {args.width, args.height};
  config.focal = args.focal;
  config.baseline = args.baseline;
  config.max_rotation_deg = args.max_rotation_deg;
  config.min_separation_px = args.min_sep;

  ordered_json manifest = ordered_json::array();
  for (int i = 0; i < args.pairs; ++i) {
    const std::string tag = pair_tag(i);
    const oblimatch::ScenePair scene =
        oblimatch::synth_scene(config, oblimatch::mix_seed(args.seed ^ kSceneSalt, i));
    oblimatch::save_scene(scene, dir / ("scene_" + tag + ".json"));

    const auto [grid_a, grid_b] = oblimatch::oracle_grids(
        scene, args.dim, args.noise, oblimatch::mix_seed(args.seed ^ kGridSalt, i));
    oblimatch::save_grid(grid_a, dir / ("grid_a_" + tag + ".dgrd"));
    oblimatch::save_grid(grid_b, dir / ("grid_b_" + tag + ".dgrd"));

    auto [kps_a, kps_b] = oblimatch::co_visible_keypoints(scene);
    oblimatch::Rng conf_rng(oblimatch::mix_seed(args.seed ^ kConfSalt, i));
    std::vector<double> conf_a(kps_a.coords.size()), conf_b(kps_b.coords.size());
    for (auto& c : conf_a) c = conf_rng.uniform();
    for (auto& c : conf_b) c = conf_rng.uniform();
    kps_a.confidence = std::move(conf_a);
    kps_b.confidence = std::move(conf_b);
    oblimatch::save_keypoints(kps_a, dir / ("kps_a_" + tag + ".json"));
    oblimatch::save_keypoints(kps_b, dir / ("kps_b_" + tag + ".json"));

    write_json_file(intrinsics_json(scene.intrinsics_a), dir / ("intrinsics_a_" + tag + ".json"));
    write_json_file(intrinsics_json(scene.intrinsics_b), dir / ("intrinsics_b_" + tag + ".json"));
    write_json_file(pose_json(scene.pose_ab), dir / ("pose_" + tag + ".json"));

    manifest.push_back(ordered_json{{"grid_a", "grid_a_" + tag + ".dgrd"},
                                    {"grid_b", "grid_b_" + tag + ".dgrd"},
                                    {"keypoints_a", "kps_a_" + tag + ".json"},
                                    {"keypoints_b", "kps_b_" + tag + ".json"},
                                    {"intrinsics_a", "intrinsics_a_" + tag + ".json"},
                                    {"intrinsics_b", "intrinsics_b_" + tag + ".json"},
                                    {"pose_gt", "pose_" + tag + ".json"}});
    log(LogLevel::kInfo, "wrote pair " + tag + " with " +
                             std::to_string(kps_a.coords.size()) + " co-visible keypoints");
  }

  const fs::path manifest_path = dir / "manifest.json";
  write_json_file(manifest, manifest_path);
  std::cout << manifest_path.string() << "\n";
  return 0;
}

// --- match -------------------------------------------------------------------

struct MatcherArgs {
  std::string weights_path;
  bool passthrough = false;
  int sinkhorn_iters = 100;
  double threshold = 0.2;
  std::string confidence_mode = "oblivious";
  int heads = 4;
};

oblimatch::MatcherConfig make_matcher_config(const MatcherArgs& args,
                                             oblimatch::MatcherWeights& weights) {
  oblimatch::MatcherConfig config;
  config.sinkhorn_iters = args.sinkhorn_iters;
  config.match_threshold = args.threshold;
  config.num_heads = args.heads;
  config.confidence_mode = args.confidence_mode == "legacy"
                               ? oblimatch::ConfidenceMode::kLegacy
                               : oblimatch::ConfidenceMode::kOblivious;
  if (args.passthrough) {
    config.passthrough = true;
    return config;
  }
  weights = oblimatch::load_weights(args.weights_path);
  const oblimatch::MatcherConfig inferred = oblimatch::infer_config(weights, config);
  config.dim = inferred.dim;
  config.num_layers = inferred.num_layers;
  if (inferred.confidence_mode != config.confidence_mode) {
    throw oblimatch::ShapeMismatch("weights encoder width disagrees with --confidence-mode");
  }
  oblimatch::validate_weights(weights, config);
  return config;
}

struct MatchArgs {
  std::string grid_a, grid_b, kps_a, kps_b, out;
  MatcherArgs matcher;
};

int run_match(const MatchArgs& args) {
  const oblimatch::DescriptorGrid grid_a = oblimatch::load_grid(args.grid_a);
  const oblimatch::DescriptorGrid grid_b = oblimatch::load_grid(args.grid_b);
  const oblimatch::KeypointSet kps_a = oblimatch::load_keypoints(args.kps_a);
  const oblimatch::KeypointSet kps_b = oblimatch::load_keypoints(args.kps_b);

  oblimatch::MatcherWeights weights;
  const oblimatch::MatcherConfig config = make_matcher_config(args.matcher, weights);
  const oblimatch::MatchResult result =
      oblimatch::match_pair(kps_a, kps_b, grid_a, grid_b, weights, config);

  ordered_json matches = ordered_json::array();
  for (const auto& m : result.matches) {
    matches.push_back(ordered_json::array({m.index_a, m.index_b, m.score}));
  }
  write_json_file(ordered_json{{"matches", matches}}, args.out);
  log(LogLevel::kInfo, "wrote " + std::to_string(result.matches.size()) + " matches");
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string manifest, out;
  MatcherArgs matcher;
  int ransac_iters = 2000;
  double ransac_confidence = 0.99999;
  double inlier_threshold_px = 1.0;
  std::uint64_t seed = 0;
  int oracle_dim = 64;
  double oracle_noise = 0.0;
  bool ablation = false;
  int jobs = 1;
  std::string label = "eval";
};

int run_eval(const EvalArgs& args) {
  const oblimatch::Manifest manifest = oblimatch::load_manifest(args.manifest);

  oblimatch::EvalConfig config;
  config.matcher = make_matcher_config(args.matcher, config.weights);
  config.ransac.max_iters = args.ransac_iters;
  config.ransac.confidence = args.ransac_confidence;
  config.ransac.inlier_threshold_px = args.inlier_threshold_px;
  config.ransac.seed = args.seed;
  config.base_seed = args.seed;
  config.oracle_dim = args.oracle_dim;
  config.oracle_noise = args.oracle_noise;
  config.label = args.label;

  bool any_failure = false;
  if (args.ablation) {
    const std::vector<oblimatch::EvalOutput> outputs =
        oblimatch::run_confidence_ablation(manifest, config, args.jobs);
    oblimatch::write_report(outputs, args.out);
    for (const auto& out : outputs) {
      for (const auto& p : out.pairs) any_failure |= !p.pose_error_deg.has_value();
    }
  } else {
    const oblimatch::EvalOutput output = oblimatch::run_manifest(manifest, config, args.jobs);
    oblimatch::write_report(output, args.out);
    for (const auto& p : output.pairs) any_failure |= !p.pose_error_deg.has_value();
    log(LogLevel::kInfo, "auc5 " + std::to_string(output.record.auc5) + " precision " +
                             std::to_string(output.record.precision));
  }
  return any_failure ? 1 : 0;
}

// --- viz ---------------------------------------------------------------------

struct VizArgs {
  std::string scene, matches, out;
  std::string kps_a, kps_b, pose, intrinsics_a, intrinsics_b;
};

oblimatch::MatchList load_matches_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw oblimatch::Error("cannot open matches file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    oblimatch::MatchList matches;
    for (const auto& m : j.at("matches")) {
      matches.push_back({m.at(0).get<int>(), m.at(1).get<int>(), m.at(2).get<double>()});
    }
    return matches;
  } catch (const nlohmann::json::exception& e) {
    throw oblimatch::Error("matches file " + path.string() + ": " + e.what());
  }
}

oblimatch::CameraIntrinsics load_intrinsics_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw oblimatch::Error("cannot open intrinsics file " + path.string());
  nlohmann::json j;
  in >> j;
  return {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
          j.at("cy").get<double>()};
}

oblimatch::Pose load_pose_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw oblimatch::Error("cannot open pose file " + path.string());
  nlohmann::json j;
  in >> j;
  oblimatch::Pose pose;
  const auto rot = j.at("rotation");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rot[3 * r + c].get<double>();
  const auto t = j.at("translation");
  pose.translation = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
  return pose;
}

int run_viz(const VizArgs& args) {
  oblimatch::KeypointSet kps_a, kps_b;
  std::optional<oblimatch::Pose> pose;
  oblimatch::CameraIntrinsics k_a, k_b;
  bool have_gt = false;

  if (!args.scene.empty()) {
    const oblimatch::ScenePair scene = oblimatch::load_scene(args.scene);
    std::tie(kps_a, kps_b) = oblimatch::co_visible_keypoints(scene);
    pose = scene.pose_ab;
    k_a = scene.intrinsics_a;
    k_b = scene.intrinsics_b;
    have_gt = true;
  } else {
    kps_a = oblimatch::load_keypoints(args.kps_a);
    kps_b = oblimatch::load_keypoints(args.kps_b);
    if (!args.pose.empty()) {
      pose = load_pose_json(args.pose);
      k_a = load_intrinsics_json(args.intrinsics_a);
      k_b = load_intrinsics_json(args.intrinsics_b);
      have_gt = true;
    }
  }

  oblimatch::MatchList matches;
  if (!args.matches.empty()) matches = load_matches_file(args.matches);

  std::optional<std::vector<bool>> correctness;
  if (have_gt) {
    std::vector<bool> flags(matches.size());
    for (std::size_t i = 0; i < matches.size(); ++i) {
      flags[i] = oblimatch::epipolar_correct(matches[i], kps_a, kps_b, *pose, k_a, k_b);
    }
    correctness = std::move(flags);
  }

  const std::string svg = oblimatch::render_matches_svg(kps_a, kps_b, matches, correctness);
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw oblimatch::Error("cannot open " + args.out + " for writing");
  out << svg;
  return 0;
}

void add_matcher_flags(CLI::App* cmd, MatcherArgs& args) {
  auto* weights = cmd->add_option("--weights", args.weights_path, "MANW weights archive");
  cmd->add_flag("--passthrough", args.passthrough,
                "descriptor inner-product scores, no learned weights")
      ->excludes(weights);
  cmd->add_option("--sinkhorn-iters", args.sinkhorn_iters, "Sinkhorn iteration count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--threshold", args.threshold, "match score threshold")
      ->capture_default_str();
  cmd->add_option("--confidence-mode", args.confidence_mode, "oblivious | legacy")
      ->check(CLI::IsMember({"oblivious", "legacy"}))
      ->capture_default_str();
  cmd->add_option("--heads", args.heads, "attention head count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"detector-oblivious keypoint matching toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic scenes, grids, keypoints");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--pairs", synth.pairs, "number of pairs")->capture_default_str();
  synth_cmd->add_option("--points", synth.points, "co-visible points per pair")
      ->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "descriptor noise sigma")->capture_default_str();
  synth_cmd->add_option("--baseline", synth.baseline, "camera baseline")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "base seed")->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "descriptor grid dimensionality")
      ->capture_default_str();
  synth_cmd->add_option("--width", synth.width, "image width, pixels")->capture_default_str();
  synth_cmd->add_option("--height", synth.height, "image height, pixels")->capture_default_str();
  synth_cmd->add_option("--focal", synth.focal, "focal length, pixels")->capture_default_str();
  synth_cmd->add_option("--max-rotation", synth.max_rotation_deg, "rotation bound, degrees")
      ->capture_default_str();
  synth_cmd->add_option("--min-sep", synth.min_sep, "min projection separation, pixels")
      ->capture_default_str();

  MatchArgs match;
  auto* match_cmd = app.add_subcommand("match", "match one pair of grids and keypoint sets");
  match_cmd->add_option("--grid-a", match.grid_a, "DGRD grid for image A")->required();
  match_cmd->add_option("--grid-b", match.grid_b, "DGRD grid for image B")->required();
  match_cmd->add_option("--kps-a", match.kps_a, "keypoint JSON for image A")->required();
  match_cmd->add_option("--kps-b", match.kps_b, "keypoint JSON for image B")->required();
  match_cmd->add_option("--out", match.out, "output matches JSON")->required();
  add_matcher_flags(match_cmd, match.matcher);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "run the two-view evaluation protocol");
  eval_cmd->add_option("--manifest", eval.manifest, "manifest JSON")->required();
  eval_cmd->add_option("--out", eval.out, "output report JSON")->required();
  add_matcher_flags(eval_cmd, eval.matcher);
  eval_cmd->add_option("--ransac-iters", eval.ransac_iters, "RANSAC max iterations")
      ->capture_default_str();
  eval_cmd->add_option("--ransac-confidence", eval.ransac_confidence, "RANSAC confidence")
      ->capture_default_str();
  eval_cmd->add_option("--inlier-threshold", eval.inlier_threshold_px,
                       "inlier threshold, pixels")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "base seed")->capture_default_str();
  eval_cmd->add_option("--oracle-dim", eval.oracle_dim, "grid dim for scene entries")
      ->capture_default_str();
  eval_cmd->add_option("--oracle-noise", eval.oracle_noise, "grid noise for scene entries")
      ->capture_default_str();
  eval_cmd->add_flag("--ablation", eval.ablation, "run native/rand/zero/one confidence modes");
  eval_cmd->add_option("--jobs", eval.jobs, "evaluation fan-out")->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--label", eval.label, "record label")->capture_default_str();

  VizArgs viz;
  auto* viz_cmd = app.add_subcommand("viz", "render matches to a static SVG");
  viz_cmd->add_option("--scene", viz.scene, "scene JSON (keypoints + ground truth)");
  viz_cmd->add_option("--matches", viz.matches, "matches JSON");
  viz_cmd->add_option("--out", viz.out, "output SVG path")->required();
  viz_cmd->add_option("--kps-a", viz.kps_a, "keypoint JSON for image A");
  viz_cmd->add_option("--kps-b", viz.kps_b, "keypoint JSON for image B");
  viz_cmd->add_option("--pose", viz.pose, "ground-truth pose JSON");
  viz_cmd->add_option("--intrinsics-a", viz.intrinsics_a, "intrinsics JSON for image A");
  viz_cmd->add_option("--intrinsics-b", viz.intrinsics_b, "intrinsics JSON for image B");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (match_cmd->parsed()) {
      if (!match.matcher.passthrough && match.matcher.weights_path.empty()) {
        throw oblimatch::Error("match requires --weights or --passthrough");
      }
      return run_match(match);
    }
    if (eval_cmd->parsed()) {
      if (!eval.matcher.passthrough && eval.matcher.weights_path.empty()) {
        throw oblimatch::Error("eval requires --weights or --passthrough");
      }
      return run_eval(eval);
    }
    if (viz_cmd->parsed()) {
      if (viz.scene.empty() && (viz.kps_a.empty() || viz.kps_b.empty())) {
        throw oblimatch::Error("viz requires --scene or both --kps-a and --kps-b");
      }
      return run_viz(viz);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
