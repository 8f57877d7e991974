#include "oblimatch/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "oblimatch/errors.hpp"
#include "oblimatch/random.hpp"

namespace oblimatch {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kOracleSeedSalt = 0x6f7261636c65ULL;      // per-pair grid synthesis
constexpr std::uint64_t kConfidenceSeedSalt = 0x636f6e6659ULL;    // random-confidence setting

bool correspondence_correct(const Eigen::Vector2d& norm_a, const Eigen::Vector2d& norm_b,
                            const EssentialMatrix& e_gt) {
  try {
    return sym_epipolar_distance(norm_a, norm_b, e_gt) < kEpipolarCorrectnessThreshold;
  } catch (const DegenerateEpiline&) {
    return false;
  }
}

}  // namespace

bool epipolar_correct(const Match& match, const KeypointSet& kps_a, const KeypointSet& kps_b,
                      const Pose& pose_gt, const CameraIntrinsics& k_a,
                      const CameraIntrinsics& k_b) {
  const EssentialMatrix e_gt = essential_from_pose(pose_gt);
  const Eigen::Vector2d na =
      normalize_pixel(kps_a.coords[static_cast<std::size_t>(match.index_a)], k_a);
  const Eigen::Vector2d nb =
      normalize_pixel(kps_b.coords[static_cast<std::size_t>(match.index_b)], k_b);
  return correspondence_correct(na, nb, e_gt);
}

std::pair<double, double> precision_and_score(const MatchList& matches,
                                              const std::vector<bool>& correct, int num_kps_a,
                                              int num_kps_b) {
  if (correct.size() != matches.size()) {
    throw std::invalid_argument("precision_and_score: flags not aligned with matches");
  }
  const int num_correct = static_cast<int>(std::count(correct.begin(), correct.end(), true));
  const double precision =
      matches.empty() ? 0.0 : static_cast<double>(num_correct) / static_cast<double>(matches.size());
  const double denom = (num_kps_a + num_kps_b) / 2.0;
  const double score = denom > 0.0 ? static_cast<double>(num_correct) / denom : 0.0;
  return {precision, score};
}

std::vector<double> pose_auc(const std::vector<std::optional<double>>& errors_deg,
                             const std::vector<double>& thresholds_deg) {
  if (errors_deg.empty()) throw EmptyInput();
  for (std::size_t i = 0; i < thresholds_deg.size(); ++i) {
    if (thresholds_deg[i] <= 0.0 || (i > 0 && thresholds_deg[i] <= thresholds_deg[i - 1])) {
      throw std::invalid_argument("pose_auc: thresholds must be ascending and positive");
    }
  }

  std::vector<double> finite;
  finite.reserve(errors_deg.size());
  for (const auto& e : errors_deg) {
    if (e.has_value() && std::isfinite(*e)) finite.push_back(std::max(*e, 0.0));
  }
  std::sort(finite.begin(), finite.end());
  const double n = static_cast<double>(errors_deg.size());

  std::vector<double> out;
  out.reserve(thresholds_deg.size());
  for (double t : thresholds_deg) {
    // Exact integral of the right-continuous empirical CDF over [0, t].
    double integral = 0.0;
    double prev = 0.0;
    double count = 0.0;
    for (double e : finite) {
      if (e > t) break;
      integral += (e - prev) * count / n;
      prev = e;
      count += 1.0;
    }
    integral += (t - prev) * count / n;
    out.push_back(100.0 * integral / t);
  }
  return out;
}

PairResult run_pair(const PairInput& pair, const MatcherConfig& matcher_config,
                    const MatcherWeights& weights, const RansacConfig& ransac_config) {
  PairResult result;
  result.num_keypoints_a = static_cast<int>(pair.kps_a.coords.size());
  result.num_keypoints_b = static_cast<int>(pair.kps_b.coords.size());

  const MatchResult matched =
      match_pair(pair.kps_a, pair.kps_b, pair.grid_a, pair.grid_b, weights, matcher_config);
  result.num_matches = static_cast<int>(matched.matches.size());

  const EssentialMatrix e_gt = essential_from_pose(pair.pose_gt);
  std::vector<bool> correct(matched.matches.size(), false);
  for (std::size_t i = 0; i < matched.matches.size(); ++i) {
    const auto& m = matched.matches[i];
    const Eigen::Vector2d na =
        normalize_pixel(pair.kps_a.coords[static_cast<std::size_t>(m.index_a)], pair.k_a);
    const Eigen::Vector2d nb =
        normalize_pixel(pair.kps_b.coords[static_cast<std::size_t>(m.index_b)], pair.k_b);
    correct[i] = correspondence_correct(na, nb, e_gt);
  }
  result.num_correct_matches = static_cast<int>(std::count(correct.begin(), correct.end(), true));
  std::tie(result.precision, result.matching_score) = precision_and_score(
      matched.matches, correct, result.num_keypoints_a, result.num_keypoints_b);

  if (matched.matches.size() >= 8) {
    try {
      const PoseEstimate estimate = ransac_essential(matched.matches, pair.kps_a, pair.kps_b,
                                                     pair.k_a, pair.k_b, ransac_config);
      result.pose_error_deg = pose_error_deg(estimate.pose, pair.pose_gt);
    } catch (const InsufficientMatches&) {
    } catch (const NoModelFound&) {
    } catch (const CheiralityAmbiguous&) {
    }
  }
  return result;
}

// --- manifest ----------------------------------------------------------------

namespace {

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path fp(p);
  return fp.is_absolute() ? fp.string() : (base / fp).string();
}

CameraIntrinsics load_intrinsics_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open intrinsics file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    return {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
            j.at("cy").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error("intrinsics file " + path.string() + ": " + e.what());
  }
}

Pose load_pose_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open pose file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    Pose pose;
    const auto rot = j.at("rotation");
    if (rot.size() != 9) throw Error("pose file " + path.string() + ": rotation needs 9 values");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rot[3 * r + c].get<double>();
    const auto t = j.at("translation");
    pose.translation = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
    return pose;
  } catch (const nlohmann::json::exception& e) {
    throw Error("pose file " + path.string() + ": " + e.what());
  }
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError("manifest " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw ManifestError("manifest " + path.string() + ": expected a JSON array");

  const std::filesystem::path base = path.parent_path();
  Manifest manifest;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& entry = j[i];
    const std::string where = "manifest entry " + std::to_string(i);
    if (!entry.is_object()) throw ManifestError(where + ": expected an object");
    ManifestEntry out;
    try {
      if (entry.contains("scene")) {
        out.scene = resolve(base, entry.at("scene").get<std::string>());
        if (entry.contains("dim")) out.dim = entry.at("dim").get<int>();
        if (entry.contains("noise")) out.noise = entry.at("noise").get<double>();
        if (entry.contains("seed")) out.seed = entry.at("seed").get<std::uint64_t>();
      } else {
        for (const char* key : {"grid_a", "grid_b", "keypoints_a", "keypoints_b", "intrinsics_a",
                                "intrinsics_b", "pose_gt"}) {
          if (!entry.contains(key)) {
            throw ManifestError(where + ": missing field '" + key + "'");
          }
        }
        out.grid_a = resolve(base, entry.at("grid_a").get<std::string>());
        out.grid_b = resolve(base, entry.at("grid_b").get<std::string>());
        out.keypoints_a = resolve(base, entry.at("keypoints_a").get<std::string>());
        out.keypoints_b = resolve(base, entry.at("keypoints_b").get<std::string>());
        out.intrinsics_a = resolve(base, entry.at("intrinsics_a").get<std::string>());
        out.intrinsics_b = resolve(base, entry.at("intrinsics_b").get<std::string>());
        out.pose_gt = resolve(base, entry.at("pose_gt").get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ManifestError(where + ": " + e.what());
    }
    manifest.entries.push_back(std::move(out));
  }
  return manifest;
}

PairInput load_pair(const ManifestEntry& entry, const EvalConfig& config, std::size_t index) {
  PairInput pair;
  if (entry.is_scene()) {
    const ScenePair scene = load_scene(entry.scene);
    pair.k_a = scene.intrinsics_a;
    pair.k_b = scene.intrinsics_b;
    pair.pose_gt = scene.pose_ab;
    std::tie(pair.kps_a, pair.kps_b) = co_visible_keypoints(scene);
    const int dim = entry.dim.value_or(config.oracle_dim);
    const double noise = entry.noise.value_or(config.oracle_noise);
    const std::uint64_t seed =
        entry.seed.value_or(mix_seed(config.base_seed ^ kOracleSeedSalt, index));
    std::tie(pair.grid_a, pair.grid_b) = oracle_grids(scene, dim, noise, seed);
  } else {
    pair.grid_a = load_grid(entry.grid_a);
    pair.grid_b = load_grid(entry.grid_b);
    pair.kps_a = load_keypoints(entry.keypoints_a);
    pair.kps_b = load_keypoints(entry.keypoints_b);
    pair.k_a = load_intrinsics_file(entry.intrinsics_a);
    pair.k_b = load_intrinsics_file(entry.intrinsics_b);
    pair.pose_gt = load_pose_file(entry.pose_gt);
  }
  return pair;
}

void apply_confidence_setting(KeypointSet& kps, ConfidenceSetting setting, std::uint64_t seed) {
  const std::size_t n = kps.coords.size();
  switch (setting) {
    case ConfidenceSetting::kAsLoaded:
      break;
    case ConfidenceSetting::kRandom: {
      Rng rng(seed);
      std::vector<double> c(n);
      for (auto& v : c) v = rng.uniform();
      kps.confidence = std::move(c);
      break;
    }
    case ConfidenceSetting::kZeros:
      kps.confidence = std::vector<double>(n, 0.0);
      break;
    case ConfidenceSetting::kOnes:
      kps.confidence = std::vector<double>(n, 1.0);
      break;
  }
}

EvalOutput run_manifest(const Manifest& manifest, const EvalConfig& config, int parallelism,
                        ConfidenceSetting setting) {
  const std::size_t n = manifest.entries.size();
  if (n == 0) throw EmptyInput();
  if (parallelism < 1) parallelism = 1;

  std::vector<PairResult> results(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        PairInput pair;
        try {
          pair = load_pair(manifest.entries[i], config, i);
        } catch (const Error& e) {
          throw ManifestError("manifest entry " + std::to_string(i) + ": " + e.what());
        }
        apply_confidence_setting(pair.kps_a, setting,
                                 mix_seed(config.base_seed ^ kConfidenceSeedSalt, 2 * i));
        apply_confidence_setting(pair.kps_b, setting,
                                 mix_seed(config.base_seed ^ kConfidenceSeedSalt, 2 * i + 1));
        RansacConfig ransac = config.ransac;
        ransac.seed = mix_seed(config.ransac.seed, i);
        results[i] = run_pair(pair, config.matcher, config.weights, ransac);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  if (parallelism == 1 || n == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    const int k = std::min<int>(parallelism, static_cast<int>(n));
    threads.reserve(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  EvalOutput out;
  out.pairs = std::move(results);
  std::vector<std::optional<double>> errors;
  errors.reserve(n);
  double precision_sum = 0.0;
  double score_sum = 0.0;
  for (const auto& r : out.pairs) {
    errors.push_back(r.pose_error_deg);
    precision_sum += r.precision;
    score_sum += r.matching_score;
  }
  const std::vector<double> auc = pose_auc(errors);
  out.record.auc5 = auc[0];
  out.record.auc10 = auc[1];
  out.record.auc20 = auc[2];
  out.record.precision = 100.0 * precision_sum / static_cast<double>(n);
  out.record.matching_score = 100.0 * score_sum / static_cast<double>(n);
  out.record.num_pairs = static_cast<int>(n);
  out.record.label = config.label;
  return out;
}

std::vector<EvalOutput> run_confidence_ablation(const Manifest& manifest,
                                                const EvalConfig& config, int parallelism) {
  static constexpr std::pair<ConfidenceSetting, const char*> kSettings[] = {
      {ConfidenceSetting::kAsLoaded, "native"},
      {ConfidenceSetting::kRandom, "rand"},
      {ConfidenceSetting::kZeros, "zero"},
      {ConfidenceSetting::kOnes, "one"},
  };
  std::vector<EvalOutput> outputs;
  for (const auto& [setting, label] : kSettings) {
    EvalConfig labeled = config;
    labeled.label = label;
    outputs.push_back(run_manifest(manifest, labeled, parallelism, setting));
  }
  return outputs;
}

// --- reports ------------------------------------------------------------------

namespace {

ordered_json pair_to_json(const PairResult& r) {
  ordered_json j;
  if (r.pose_error_deg) {
    j["pose_error_deg"] = *r.pose_error_deg;
  } else {
    j["pose_error_deg"] = nullptr;
  }
  j["num_matches"] = r.num_matches;
  j["num_correct_matches"] = r.num_correct_matches;
  j["num_keypoints_a"] = r.num_keypoints_a;
  j["num_keypoints_b"] = r.num_keypoints_b;
  j["precision"] = r.precision;
  j["matching_score"] = r.matching_score;
  return j;
}

ordered_json output_to_json(const EvalOutput& out) {
  ordered_json j;
  j["label"] = out.record.label;
  j["auc"] = ordered_json{{"5", out.record.auc5}, {"10", out.record.auc10},
                          {"20", out.record.auc20}};
  j["precision"] = out.record.precision;
  j["matching_score"] = out.record.matching_score;
  j["num_pairs"] = out.record.num_pairs;
  ordered_json pairs = ordered_json::array();
  for (const auto& p : out.pairs) pairs.push_back(pair_to_json(p));
  j["pairs"] = pairs;
  return j;
}

}  // namespace

std::string report_to_string(const EvalOutput& output) {
  return output_to_json(output).dump(2) + "\n";
}

std::string report_to_string(const std::vector<EvalOutput>& outputs) {
  ordered_json j = ordered_json::array();
  for (const auto& out : outputs) j.push_back(output_to_json(out));
  return j.dump(2) + "\n";
}

void write_report(const EvalOutput& output, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << report_to_string(output);
}

void write_report(const std::vector<EvalOutput>& outputs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << report_to_string(outputs);
}

}  // namespace oblimatch
