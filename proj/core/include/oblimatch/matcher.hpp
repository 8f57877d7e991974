#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "oblimatch/descriptor_field.hpp"

namespace oblimatch {

enum class ConfidenceMode {
  kOblivious,  // keypoint confidence is removed from the pipeline entirely
  kLegacy,     // confidence is a third input channel of the keypoint encoder
};

struct MatcherConfig {
  int dim = 256;
  int num_layers = 9;   // alternating self/cross attention, starting with self
  int num_heads = 4;
  int sinkhorn_iters = 100;
  double match_threshold = 0.2;
  ConfidenceMode confidence_mode = ConfidenceMode::kOblivious;
  // Bypass the encoder, attention, and learned projection: features are the
  // sampled descriptors and scores their scaled inner products. Used for
  // oracle runs with no trained weights.
  bool passthrough = false;
};

struct AttentionLayerWeights {
  Eigen::MatrixXd query_w, key_w, value_w, merge_w;  // dim × dim
  Eigen::VectorXd query_b, key_b, value_b, merge_b;
  Eigen::MatrixXd mlp0_w;  // 2*dim × 2*dim
  Eigen::VectorXd mlp0_b;
  Eigen::MatrixXd mlp1_w;  // dim × 2*dim
  Eigen::VectorXd mlp1_b;
};

// All learned tensors of the matcher head. Values are carried as doubles in
// memory but are exactly representable as f32, matching the archive format.
struct MatcherWeights {
  std::vector<Eigen::MatrixXd> encoder_w;  // 4 linears; first maps 2 (or 3) inputs
  std::vector<Eigen::VectorXd> encoder_b;
  std::vector<AttentionLayerWeights> layers;
  Eigen::MatrixXd proj_w;  // dim × dim
  Eigen::VectorXd proj_b;
  double dustbin_score = 0.0;
};

// Augmented partial assignment: p is (M+1)×(N+1) with the last row/column as
// dustbins. Non-dustbin entries live in [0, 1] and non-dustbin rows/columns
// each sum to at most 1; the dustbin-dustbin corner carries the balance mass
// (up to min(M, N)) required by the marginals.
struct AssignmentMatrix {
  Eigen::MatrixXd p;
  int rows_a = 0;  // M
  int cols_b = 0;  // N
};

struct Match {
  int index_a = 0;
  int index_b = 0;
  double score = 0.0;
};
using MatchList = std::vector<Match>;

struct MatchResult {
  AssignmentMatrix assignment;
  MatchList matches;
};

// Maps pixel coordinates to [-1, 1] per axis by image size.
Eigen::Vector2d normalize_coords(const Eigen::Vector2d& p, const std::array<int, 2>& image_size);

// feature_i = desc_i + MLP(normalized coords_i). In legacy mode the MLP also
// receives the keypoint confidence; in oblivious mode confidence is never
// read. Returns a dim × N matrix, one feature per column.
Eigen::MatrixXd encode_keypoints(const KeypointSet& kps, const DescriptorSet& descs,
                                 const MatcherWeights& weights, const MatcherConfig& config);

// num_layers alternating self/cross multi-head attention updates, applied
// symmetrically to both images with shared weights.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gnn_forward(const Eigen::MatrixXd& feat_a,
                                                        const Eigen::MatrixXd& feat_b,
                                                        const MatcherWeights& weights,
                                                        const MatcherConfig& config);

// S_ij = <proj(a_i), proj(b_j)> / sqrt(D); identity projection in passthrough.
Eigen::MatrixXd score_matrix(const Eigen::MatrixXd& feat_a, const Eigen::MatrixXd& feat_b,
                             const MatcherWeights& weights, const MatcherConfig& config);

// Log-domain Sinkhorn over the dustbin-augmented score matrix, targeting row
// marginals [1,...,1, N] and column marginals [1,...,1, M]. The final
// half-step is the row normalization, so non-dustbin row sums are exact.
AssignmentMatrix sinkhorn(const Eigen::MatrixXd& scores, double dustbin_score, int iters);

// Mutual-argmax decoding over non-dustbin entries with a score threshold.
// Ties break toward the lowest index; the result is one-to-one.
MatchList extract_matches(const AssignmentMatrix& assignment, double threshold);

// The full matcher: sample descriptors, encode, attend, score, transport,
// decode. In oblivious mode the output is bit-identical for any confidence.
MatchResult match_pair(const KeypointSet& kps_a, const KeypointSet& kps_b,
                       const DescriptorGrid& grid_a, const DescriptorGrid& grid_b,
                       const MatcherWeights& weights, const MatcherConfig& config);

// Seeded init: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], f32-exact.
MatcherWeights random_weights(const MatcherConfig& config, std::uint64_t seed);

// Throws ShapeMismatch when the weights do not fit the config.
void validate_weights(const MatcherWeights& weights, const MatcherConfig& config);

// dim, layer count, and confidence mode as implied by the weight shapes.
MatcherConfig infer_config(const MatcherWeights& weights, const MatcherConfig& base);

// "MANW" archive: magic, u32 tensor count, then per tensor u16 name length,
// name, u8 rank, rank×u32 dims, little-endian f32 payload (row-major).
void save_weights(const MatcherWeights& weights, const std::filesystem::path& path);
MatcherWeights load_weights(const std::filesystem::path& path);

}  // namespace oblimatch
