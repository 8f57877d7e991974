#include "oblimatch/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>

#include "oblimatch/errors.hpp"
#include "oblimatch/random.hpp"

namespace oblimatch {

namespace {

int encoder_input_width(const MatcherConfig& config) {
  return config.confidence_mode == ConfidenceMode::kLegacy ? 3 : 2;
}

Eigen::MatrixXd relu(Eigen::MatrixXd x) {
  return x.cwiseMax(0.0);
}

Eigen::MatrixXd linear(const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                       const Eigen::MatrixXd& x) {
  return (w * x).colwise() + b;
}

// Scaled dot-product multi-head attention; queries from `target`, keys and
// values from `source`. Returns one message per target column.
Eigen::MatrixXd attention_message(const AttentionLayerWeights& layer, int num_heads,
                                  const Eigen::MatrixXd& target, const Eigen::MatrixXd& source) {
  const Eigen::Index dim = target.rows();
  const Eigen::Index head_dim = dim / num_heads;
  const Eigen::MatrixXd q = linear(layer.query_w, layer.query_b, target);
  const Eigen::MatrixXd k = linear(layer.key_w, layer.key_b, source);
  const Eigen::MatrixXd v = linear(layer.value_w, layer.value_b, source);

  Eigen::MatrixXd message(dim, target.cols());
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (int h = 0; h < num_heads; ++h) {
    const auto qh = q.middleRows(h * head_dim, head_dim);
    const auto kh = k.middleRows(h * head_dim, head_dim);
    const auto vh = v.middleRows(h * head_dim, head_dim);
    Eigen::MatrixXd logits = (qh.transpose() * kh) * scale;  // targets × sources
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double m = logits.row(i).maxCoeff();
      Eigen::ArrayXd w = (logits.row(i).transpose().array() - m).exp();
      logits.row(i) = (w / w.sum()).matrix().transpose();
    }
    message.middleRows(h * head_dim, head_dim) = vh * logits.transpose();
  }
  return linear(layer.merge_w, layer.merge_b, message);
}

Eigen::MatrixXd residual_update(const AttentionLayerWeights& layer, const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& message) {
  Eigen::MatrixXd cat(x.rows() + message.rows(), x.cols());
  cat.topRows(x.rows()) = x;
  cat.bottomRows(message.rows()) = message;
  return x + linear(layer.mlp1_w, layer.mlp1_b, relu(linear(layer.mlp0_w, layer.mlp0_b, cat)));
}

Eigen::MatrixXd descs_as_matrix(const DescriptorSet& descs) {
  if (descs.descs.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(descs.descs[0].size(), static_cast<Eigen::Index>(descs.descs.size()));
  for (std::size_t i = 0; i < descs.descs.size(); ++i) {
    if (descs.descs[i].size() != m.rows()) throw ShapeMismatch("descriptor widths disagree");
    m.col(static_cast<Eigen::Index>(i)) = descs.descs[i];
  }
  return m;
}

}  // namespace

Eigen::Vector2d normalize_coords(const Eigen::Vector2d& p, const std::array<int, 2>& image_size) {
  const double sx = std::max(image_size[0] - 1, 1);
  const double sy = std::max(image_size[1] - 1, 1);
  return {2.0 * p.x() / sx - 1.0, 2.0 * p.y() / sy - 1.0};
}

Eigen::MatrixXd encode_keypoints(const KeypointSet& kps, const DescriptorSet& descs,
                                 const MatcherWeights& weights, const MatcherConfig& config) {
  const Eigen::Index n = static_cast<Eigen::Index>(kps.coords.size());
  if (static_cast<Eigen::Index>(descs.descs.size()) != n) {
    throw ShapeMismatch("keypoints and descriptors disagree in length");
  }
  const bool legacy = config.confidence_mode == ConfidenceMode::kLegacy;
  if (legacy && !kps.confidence) throw MissingConfidence();
  if (weights.encoder_w.size() != 4 || weights.encoder_b.size() != 4) {
    throw ShapeMismatch("keypoint encoder needs 4 linear layers");
  }

  const int in_width = encoder_input_width(config);
  Eigen::MatrixXd input(in_width, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    input.col(i).head<2>() = normalize_coords(kps.coords[i], kps.image_size);
    if (legacy) input(2, i) = (*kps.confidence)[static_cast<std::size_t>(i)];
  }

  Eigen::MatrixXd h = input;
  for (int l = 0; l < 4; ++l) {
    h = linear(weights.encoder_w[l], weights.encoder_b[l], h);
    if (l < 3) h = relu(std::move(h));
  }
  if (n == 0) return Eigen::MatrixXd(config.dim, 0);
  const Eigen::MatrixXd d = descs_as_matrix(descs);
  if (d.rows() != h.rows()) {
    throw ShapeMismatch("descriptor width disagrees with encoder output width");
  }
  return d + h;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gnn_forward(const Eigen::MatrixXd& feat_a,
                                                        const Eigen::MatrixXd& feat_b,
                                                        const MatcherWeights& weights,
                                                        const MatcherConfig& config) {
  if (feat_a.cols() == 0 || feat_b.cols() == 0) {
    throw ShapeMismatch("gnn_forward requires nonempty feature lists");
  }
  if (feat_a.rows() != feat_b.rows()) throw ShapeMismatch("feature widths disagree");
  if (static_cast<int>(weights.layers.size()) < config.num_layers) {
    throw ShapeMismatch("weights carry fewer attention layers than configured");
  }
  if (feat_a.rows() % config.num_heads != 0) {
    throw ShapeMismatch("feature width not divisible by head count");
  }

  Eigen::MatrixXd a = feat_a;
  Eigen::MatrixXd b = feat_b;
  for (int l = 0; l < config.num_layers; ++l) {
    const auto& layer = weights.layers[static_cast<std::size_t>(l)];
    const bool is_self = (l % 2 == 0);
    const Eigen::MatrixXd msg_a =
        attention_message(layer, config.num_heads, a, is_self ? a : b);
    const Eigen::MatrixXd msg_b =
        attention_message(layer, config.num_heads, b, is_self ? b : a);
    a = residual_update(layer, a, msg_a);
    b = residual_update(layer, b, msg_b);
  }
  return {std::move(a), std::move(b)};
}

Eigen::MatrixXd score_matrix(const Eigen::MatrixXd& feat_a, const Eigen::MatrixXd& feat_b,
                             const MatcherWeights& weights, const MatcherConfig& config) {
  if (feat_a.rows() != feat_b.rows()) throw ShapeMismatch("feature widths disagree");
  const double scale = 1.0 / std::sqrt(static_cast<double>(feat_a.rows()));
  if (config.passthrough) {
    return (feat_a.transpose() * feat_b) * scale;
  }
  const Eigen::MatrixXd pa = linear(weights.proj_w, weights.proj_b, feat_a);
  const Eigen::MatrixXd pb = linear(weights.proj_w, weights.proj_b, feat_b);
  return (pa.transpose() * pb) * scale;
}

MatchList extract_matches(const AssignmentMatrix& assignment, double threshold) {
  const int m = assignment.rows_a;
  const int n = assignment.cols_b;
  MatchList matches;
  if (m == 0 || n == 0) return matches;

  std::vector<int> row_best(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i) {
    for (int j = 1; j < n; ++j) {
      if (assignment.p(i, j) > assignment.p(i, row_best[static_cast<std::size_t>(i)])) {
        row_best[static_cast<std::size_t>(i)] = j;
      }
    }
  }
  std::vector<int> col_best(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < n; ++j) {
    for (int i = 1; i < m; ++i) {
      if (assignment.p(i, j) > assignment.p(col_best[static_cast<std::size_t>(j)], j)) {
        col_best[static_cast<std::size_t>(j)] = i;
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    const int j = row_best[static_cast<std::size_t>(i)];
    const double score = assignment.p(i, j);
    if (col_best[static_cast<std::size_t>(j)] == i && score >= threshold) {
      matches.push_back({i, j, score});
    }
  }
  return matches;
}

MatchResult match_pair(const KeypointSet& kps_a, const KeypointSet& kps_b,
                       const DescriptorGrid& grid_a, const DescriptorGrid& grid_b,
                       const MatcherWeights& weights, const MatcherConfig& config) {
  if (grid_a.dim != grid_b.dim) throw ShapeMismatch("grid descriptor widths disagree");

  const DescriptorSet descs_a = sample_descriptors(grid_a, kps_a);
  const DescriptorSet descs_b = sample_descriptors(grid_b, kps_b);
  const Eigen::Index m = static_cast<Eigen::Index>(kps_a.coords.size());
  const Eigen::Index n = static_cast<Eigen::Index>(kps_b.coords.size());

  Eigen::MatrixXd feat_a, feat_b;
  double dustbin = 0.0;
  if (config.passthrough) {
    feat_a = descs_as_matrix(descs_a);
    feat_b = descs_as_matrix(descs_b);
    if (feat_a.size() == 0) feat_a = Eigen::MatrixXd(grid_a.dim, 0);
    if (feat_b.size() == 0) feat_b = Eigen::MatrixXd(grid_b.dim, 0);
  } else {
    if (grid_a.dim != config.dim) {
      throw ShapeMismatch("grid descriptor width disagrees with matcher dim");
    }
    validate_weights(weights, config);
    feat_a = encode_keypoints(kps_a, descs_a, weights, config);
    feat_b = encode_keypoints(kps_b, descs_b, weights, config);
    if (m > 0 && n > 0 && config.num_layers > 0) {
      std::tie(feat_a, feat_b) = gnn_forward(feat_a, feat_b, weights, config);
    }
    dustbin = weights.dustbin_score;
  }

  Eigen::MatrixXd scores = score_matrix(feat_a, feat_b, weights, config);
  MatchResult result;
  result.assignment = sinkhorn(scores, dustbin, config.sinkhorn_iters);
  result.matches = extract_matches(result.assignment, config.match_threshold);
  return result;
}

// --- weights ----------------------------------------------------------------

namespace {

double init_value(Rng& rng, int fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
}

Eigen::MatrixXd init_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = init_value(rng, static_cast<int>(cols));
  }
  return w;
}

Eigen::VectorXd init_vector(Rng& rng, Eigen::Index len, int fan_in) {
  Eigen::VectorXd b(len);
  for (Eigen::Index i = 0; i < len; ++i) b[i] = init_value(rng, fan_in);
  return b;
}

void check_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeMismatch(what);
}

void check_finite(const Eigen::MatrixXd& m, const std::string& what) {
  if (!m.allFinite()) throw ShapeMismatch(what + " contains non-finite values");
}

}  // namespace

MatcherWeights random_weights(const MatcherConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const int d = config.dim;
  const int in = encoder_input_width(config);

  MatcherWeights w;
  int fan = in;
  for (int l = 0; l < 4; ++l) {
    w.encoder_w.push_back(init_matrix(rng, d, fan));
    w.encoder_b.push_back(init_vector(rng, d, fan));
    fan = d;
  }
  for (int l = 0; l < config.num_layers; ++l) {
    AttentionLayerWeights layer;
    layer.query_w = init_matrix(rng, d, d);
    layer.query_b = init_vector(rng, d, d);
    layer.key_w = init_matrix(rng, d, d);
    layer.key_b = init_vector(rng, d, d);
    layer.value_w = init_matrix(rng, d, d);
    layer.value_b = init_vector(rng, d, d);
    layer.merge_w = init_matrix(rng, d, d);
    layer.merge_b = init_vector(rng, d, d);
    layer.mlp0_w = init_matrix(rng, 2 * d, 2 * d);
    layer.mlp0_b = init_vector(rng, 2 * d, 2 * d);
    layer.mlp1_w = init_matrix(rng, d, 2 * d);
    layer.mlp1_b = init_vector(rng, d, 2 * d);
    w.layers.push_back(std::move(layer));
  }
  w.proj_w = init_matrix(rng, d, d);
  w.proj_b = init_vector(rng, d, d);
  w.dustbin_score = 1.0;
  return w;
}

void validate_weights(const MatcherWeights& w, const MatcherConfig& config) {
  const int d = config.dim;
  check_shape(d >= 1 && config.num_heads >= 1 && d % config.num_heads == 0,
              "dim must be a positive multiple of num_heads");
  check_shape(w.encoder_w.size() == 4 && w.encoder_b.size() == 4,
              "keypoint encoder needs 4 linear layers");
  const int in = encoder_input_width(config);
  check_shape(w.encoder_w[0].rows() == d && w.encoder_w[0].cols() == in,
              "encoder input layer shape disagrees with config");
  for (int l = 1; l < 4; ++l) {
    check_shape(w.encoder_w[static_cast<std::size_t>(l)].rows() == d &&
                    w.encoder_w[static_cast<std::size_t>(l)].cols() == d,
                "encoder hidden layer shape disagrees with config");
  }
  for (int l = 0; l < 4; ++l) {
    check_shape(w.encoder_b[static_cast<std::size_t>(l)].size() == d, "encoder bias length");
    check_finite(w.encoder_w[static_cast<std::size_t>(l)], "encoder weight");
    check_finite(w.encoder_b[static_cast<std::size_t>(l)], "encoder bias");
  }
  check_shape(static_cast<int>(w.layers.size()) == config.num_layers,
              "attention layer count disagrees with config");
  for (const auto& layer : w.layers) {
    for (const auto* m : {&layer.query_w, &layer.key_w, &layer.value_w, &layer.merge_w}) {
      check_shape(m->rows() == d && m->cols() == d, "attention projection shape");
      check_finite(*m, "attention projection");
    }
    for (const auto* b : {&layer.query_b, &layer.key_b, &layer.value_b, &layer.merge_b}) {
      check_shape(b->size() == d, "attention bias length");
      check_finite(*b, "attention bias");
    }
    check_shape(layer.mlp0_w.rows() == 2 * d && layer.mlp0_w.cols() == 2 * d &&
                    layer.mlp0_b.size() == 2 * d,
                "layer MLP first linear shape");
    check_shape(layer.mlp1_w.rows() == d && layer.mlp1_w.cols() == 2 * d &&
                    layer.mlp1_b.size() == d,
                "layer MLP second linear shape");
    check_finite(layer.mlp0_w, "layer MLP weight");
    check_finite(layer.mlp1_w, "layer MLP weight");
  }
  check_shape(w.proj_w.rows() == d && w.proj_w.cols() == d && w.proj_b.size() == d,
              "final projection shape");
  check_finite(w.proj_w, "final projection");
  check_shape(std::isfinite(w.dustbin_score), "dustbin score must be finite");
}

MatcherConfig infer_config(const MatcherWeights& weights, const MatcherConfig& base) {
  MatcherConfig config = base;
  if (!weights.encoder_w.empty()) {
    config.dim = static_cast<int>(weights.encoder_w[0].rows());
    config.confidence_mode = weights.encoder_w[0].cols() == 3 ? ConfidenceMode::kLegacy
                                                              : ConfidenceMode::kOblivious;
  }
  config.num_layers = static_cast<int>(weights.layers.size());
  return config;
}

// --- archive ----------------------------------------------------------------

namespace {

constexpr char kWeightsMagic[4] = {'M', 'A', 'N', 'W'};

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

void append_matrix(std::vector<NamedTensor>& out, const std::string& name,
                   const Eigen::MatrixXd& m) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.values.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.values.push_back(static_cast<float>(m(r, c)));
  }
  out.push_back(std::move(t));
}

void append_vector(std::vector<NamedTensor>& out, const std::string& name,
                   const Eigen::VectorXd& v) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<std::uint32_t>(v.size())};
  for (Eigen::Index i = 0; i < v.size(); ++i) t.values.push_back(static_cast<float>(v[i]));
  out.push_back(std::move(t));
}

std::vector<NamedTensor> flatten(const MatcherWeights& w) {
  std::vector<NamedTensor> tensors;
  for (std::size_t l = 0; l < w.encoder_w.size(); ++l) {
    const std::string base = "encoder." + std::to_string(l);
    append_matrix(tensors, base + ".weight", w.encoder_w[l]);
    append_vector(tensors, base + ".bias", w.encoder_b[l]);
  }
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const std::string base = "layers." + std::to_string(l);
    const auto& layer = w.layers[l];
    append_matrix(tensors, base + ".query.weight", layer.query_w);
    append_vector(tensors, base + ".query.bias", layer.query_b);
    append_matrix(tensors, base + ".key.weight", layer.key_w);
    append_vector(tensors, base + ".key.bias", layer.key_b);
    append_matrix(tensors, base + ".value.weight", layer.value_w);
    append_vector(tensors, base + ".value.bias", layer.value_b);
    append_matrix(tensors, base + ".merge.weight", layer.merge_w);
    append_vector(tensors, base + ".merge.bias", layer.merge_b);
    append_matrix(tensors, base + ".mlp.0.weight", layer.mlp0_w);
    append_vector(tensors, base + ".mlp.0.bias", layer.mlp0_b);
    append_matrix(tensors, base + ".mlp.1.weight", layer.mlp1_w);
    append_vector(tensors, base + ".mlp.1.bias", layer.mlp1_b);
  }
  append_matrix(tensors, "proj.weight", w.proj_w);
  append_vector(tensors, "proj.bias", w.proj_b);
  NamedTensor bin;
  bin.name = "dustbin";
  bin.dims = {1};
  bin.values = {static_cast<float>(w.dustbin_score)};
  tensors.push_back(std::move(bin));
  return tensors;
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16_le(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16_le(std::istream& in) {
  unsigned char b[2] = {};
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

Eigen::MatrixXd tensor_as_matrix(const NamedTensor& t) {
  if (t.dims.size() != 2) throw ShapeMismatch("tensor " + t.name + " is not rank 2");
  Eigen::MatrixXd m(t.dims[0], t.dims[1]);
  std::size_t idx = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.values[idx++];
  }
  return m;
}

Eigen::VectorXd tensor_as_vector(const NamedTensor& t) {
  if (t.dims.size() != 1) throw ShapeMismatch("tensor " + t.name + " is not rank 1");
  Eigen::VectorXd v(t.dims[0]);
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = t.values[i];
  }
  return v;
}

}  // namespace

void save_weights(const MatcherWeights& weights, const std::filesystem::path& path) {
  const std::vector<NamedTensor> tensors = flatten(weights);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kWeightsMagic, 4);
  write_u32_le(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    write_u16_le(out, static_cast<std::uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    out.put(static_cast<char>(t.dims.size()));
    std::size_t count = 1;
    for (std::uint32_t d : t.dims) {
      write_u32_le(out, d);
      count *= d;
    }
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(count * sizeof(float)));
  }
  if (!out) throw Error("short write to " + path.string());
}

MatcherWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open weights file " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kWeightsMagic, 4) != 0) {
    throw BadMagic("weights file " + path.string() + ": bad magic");
  }
  const std::uint32_t count = read_u32_le(in);
  if (!in) throw TruncatedFile("weights file " + path.string() + ": truncated header");

  std::map<std::string, NamedTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint16_t name_len = read_u16_le(in);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    const int rank = in.get();
    if (!in || rank < 0) throw TruncatedFile("weights file " + path.string() + ": truncated");
    std::size_t elems = 1;
    for (int r = 0; r < rank; ++r) {
      const std::uint32_t d = read_u32_le(in);
      t.dims.push_back(d);
      elems *= d;
    }
    if (!in || elems > (1ULL << 28)) {
      throw TruncatedFile("weights file " + path.string() + ": truncated tensor header");
    }
    t.values.resize(elems);
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(elems * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != elems * sizeof(float)) {
      throw TruncatedFile("weights file " + path.string() + ": truncated payload for " + t.name);
    }
    tensors[t.name] = std::move(t);
  }

  auto take_matrix = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ShapeMismatch("missing tensor " + name);
    return tensor_as_matrix(it->second);
  };
  auto take_vector = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ShapeMismatch("missing tensor " + name);
    return tensor_as_vector(it->second);
  };

  MatcherWeights w;
  for (int l = 0; l < 4; ++l) {
    const std::string base = "encoder." + std::to_string(l);
    w.encoder_w.push_back(take_matrix(base + ".weight"));
    w.encoder_b.push_back(take_vector(base + ".bias"));
  }
  for (int l = 0; tensors.count("layers." + std::to_string(l) + ".query.weight") != 0; ++l) {
    const std::string base = "layers." + std::to_string(l);
    AttentionLayerWeights layer;
    layer.query_w = take_matrix(base + ".query.weight");
    layer.query_b = take_vector(base + ".query.bias");
    layer.key_w = take_matrix(base + ".key.weight");
    layer.key_b = take_vector(base + ".key.bias");
    layer.value_w = take_matrix(base + ".value.weight");
    layer.value_b = take_vector(base + ".value.bias");
    layer.merge_w = take_matrix(base + ".merge.weight");
    layer.merge_b = take_vector(base + ".merge.bias");
    layer.mlp0_w = take_matrix(base + ".mlp.0.weight");
    layer.mlp0_b = take_vector(base + ".mlp.0.bias");
    layer.mlp1_w = take_matrix(base + ".mlp.1.weight");
    layer.mlp1_b = take_vector(base + ".mlp.1.bias");
    w.layers.push_back(std::move(layer));
  }
  w.proj_w = take_matrix("proj.weight");
  w.proj_b = take_vector("proj.bias");
  const auto bin = take_vector("dustbin");
  if (bin.size() != 1) throw ShapeMismatch("dustbin tensor must hold one value");
  w.dustbin_score = bin[0];
  return w;
}

}  // namespace oblimatch
