#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oblimatch/descriptor_field.hpp"
#include "oblimatch/matcher.hpp"
#include "oblimatch/pose_estimation.hpp"
#include "oblimatch/scene.hpp"

namespace oblimatch {

// A predicted match is correct iff its symmetric epipolar distance under the
// ground-truth essential matrix is strictly below this threshold.
inline constexpr double kEpipolarCorrectnessThreshold = 5e-4;

inline constexpr double kPoseAucThresholdsDeg[3] = {5.0, 10.0, 20.0};

struct PairResult {
  std::optional<double> pose_error_deg;  // nullopt marks a failed estimate
  int num_matches = 0;
  int num_correct_matches = 0;
  int num_keypoints_a = 0;
  int num_keypoints_b = 0;
  double precision = 0.0;       // in [0, 1]
  double matching_score = 0.0;  // in [0, 1]
};

// One row of a results table; AUC and mean precision/score as percentages.
struct EvalRecord {
  double auc5 = 0.0;
  double auc10 = 0.0;
  double auc20 = 0.0;
  double precision = 0.0;
  double matching_score = 0.0;
  int num_pairs = 0;
  std::string label;
};

struct EvalOutput {
  EvalRecord record;
  std::vector<PairResult> pairs;
};

struct PairInput {
  KeypointSet kps_a, kps_b;
  DescriptorGrid grid_a, grid_b;
  CameraIntrinsics k_a, k_b;
  Pose pose_gt;
};

// Either a scene file (grids and keypoints are synthesized from it) or the
// full set of pre-extracted files. Paths are resolved against the manifest
// location at load time.
struct ManifestEntry {
  std::string scene;
  std::string grid_a, grid_b;
  std::string keypoints_a, keypoints_b;
  std::string intrinsics_a, intrinsics_b;
  std::string pose_gt;
  std::optional<int> dim;         // scene-entry overrides
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
  bool is_scene() const { return !scene.empty(); }
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

enum class ConfidenceSetting { kAsLoaded, kRandom, kZeros, kOnes };

struct EvalConfig {
  MatcherConfig matcher;
  MatcherWeights weights;  // unused in passthrough mode
  RansacConfig ransac;
  int oracle_dim = 64;        // grid synthesis for scene entries
  double oracle_noise = 0.0;
  std::uint64_t base_seed = 0;
  std::string label = "eval";
};

bool epipolar_correct(const Match& match, const KeypointSet& kps_a, const KeypointSet& kps_b,
                      const Pose& pose_gt, const CameraIntrinsics& k_a,
                      const CameraIntrinsics& k_b);

// P = correct/total matches, M = correct/((num_kps_a + num_kps_b)/2);
// both 0 when their denominators are 0.
std::pair<double, double> precision_and_score(const MatchList& matches,
                                              const std::vector<bool>& correct, int num_kps_a,
                                              int num_kps_b);

// Exact step-function integral of the empirical recall curve, normalized per
// threshold and reported as percentages. Failed estimates count as infinite
// error. Throws EmptyInput on an empty error list.
std::vector<double> pose_auc(const std::vector<std::optional<double>>& errors_deg,
                             const std::vector<double>& thresholds_deg = {5.0, 10.0, 20.0});

// match → ransac → recover → pose error, plus per-match epipolar correctness.
// RANSAC failure is recorded in the result, not thrown.
PairResult run_pair(const PairInput& pair, const MatcherConfig& matcher_config,
                    const MatcherWeights& weights, const RansacConfig& ransac_config);

Manifest load_manifest(const std::filesystem::path& path);

// Loads one manifest entry; `index` feeds the derived per-pair seeds.
PairInput load_pair(const ManifestEntry& entry, const EvalConfig& config, std::size_t index);

void apply_confidence_setting(KeypointSet& kps, ConfidenceSetting setting, std::uint64_t seed);

// Evaluates every entry and aggregates in manifest order. The result is
// independent of the parallelism degree.
EvalOutput run_manifest(const Manifest& manifest, const EvalConfig& config, int parallelism,
                        ConfidenceSetting setting = ConfidenceSetting::kAsLoaded);

// Runs the {native, rand, zero, one} confidence settings. In oblivious mode
// all four outputs are identical since confidence is never read.
std::vector<EvalOutput> run_confidence_ablation(const Manifest& manifest, const EvalConfig& config,
                                                int parallelism);

std::string report_to_string(const EvalOutput& output);
std::string report_to_string(const std::vector<EvalOutput>& outputs);
void write_report(const EvalOutput& output, const std::filesystem::path& path);
void write_report(const std::vector<EvalOutput>& outputs, const std::filesystem::path& path);

}  // namespace oblimatch
