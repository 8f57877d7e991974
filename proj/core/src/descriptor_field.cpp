#include "oblimatch/descriptor_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "oblimatch/errors.hpp"
#include "oblimatch/random.hpp"

namespace oblimatch {

namespace {

constexpr char kGridMagic[4] = {'D', 'G', 'R', 'D'};

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

DescriptorGrid DescriptorGrid::zeros(int width, int height, int dim) {
  DescriptorGrid g;
  g.width = width;
  g.height = height;
  g.dim = dim;
  g.data.assign(static_cast<std::size_t>(width) * height * dim, 0.0f);
  return g;
}

Eigen::VectorXd sample_bilinear(const DescriptorGrid& grid, double x, double y) {
  if (!(x >= 0.0 && x < grid.width && y >= 0.0 && y < grid.height)) throw OutOfBounds(0);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, grid.width - 1);
  const int y1 = std::min(y0 + 1, grid.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double w00 = (1.0 - fx) * (1.0 - fy);
  const double w01 = fx * (1.0 - fy);
  const double w10 = (1.0 - fx) * fy;
  const double w11 = fx * fy;

  Eigen::VectorXd v(grid.dim);
  for (int c = 0; c < grid.dim; ++c) {
    v[c] = w00 * grid.at(y0, x0, c) + w01 * grid.at(y0, x1, c) + w10 * grid.at(y1, x0, c) +
           w11 * grid.at(y1, x1, c);
  }
  return v;
}

DescriptorSet sample_descriptors(const DescriptorGrid& grid, const KeypointSet& kps) {
  DescriptorSet set;
  set.descs.reserve(kps.coords.size());
  for (std::size_t i = 0; i < kps.coords.size(); ++i) {
    const auto& p = kps.coords[i];
    if (!(p.x() >= 0.0 && p.x() < grid.width && p.y() >= 0.0 && p.y() < grid.height)) {
      throw OutOfBounds(i);
    }
    Eigen::VectorXd v = sample_bilinear(grid, p.x(), p.y());
    const double norm = v.norm();
    if (norm < 1e-12) throw ZeroVector(i);
    set.descs.push_back(v / norm);
  }
  return set;
}

namespace {

void fill_random_unit_cells(DescriptorGrid& grid, Rng& rng) {
  const std::size_t cells = static_cast<std::size_t>(grid.width) * grid.height;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const Eigen::VectorXd v = rng.unit_vector(grid.dim);
    float* dst = grid.data.data() + cell * grid.dim;
    for (int c = 0; c < grid.dim; ++c) dst[c] = static_cast<float>(v[c]);
  }
}

// Writes the vector into the 2x2 block of cells bilinear sampling reads at p,
// so a sample taken exactly at p returns the vector.
void splat(DescriptorGrid& grid, const Eigen::Vector2d& p, const Eigen::VectorXd& v) {
  const int x0 = static_cast<int>(std::floor(p.x()));
  const int y0 = static_cast<int>(std::floor(p.y()));
  const int x1 = std::min(x0 + 1, grid.width - 1);
  const int y1 = std::min(y0 + 1, grid.height - 1);
  for (int y : {y0, y1}) {
    for (int x : {x0, x1}) {
      for (int c = 0; c < grid.dim; ++c) grid.at(y, x, c) = static_cast<float>(v[c]);
    }
  }
}

Eigen::VectorXd perturbed_unit(const Eigen::VectorXd& v, double sigma, Rng& rng) {
  Eigen::VectorXd out = v;
  for (int c = 0; c < out.size(); ++c) out[c] += sigma * rng.normal();
  const double norm = out.norm();
  return norm < 1e-9 ? v : Eigen::VectorXd(out / norm);
}

}  // namespace

std::pair<DescriptorGrid, DescriptorGrid> oracle_grids(const ScenePair& scene, int dim,
                                                       double noise_sigma, std::uint64_t seed) {
  if (dim < 8) throw std::invalid_argument("oracle_grids: dim must be at least 8");

  Rng rng(seed);
  DescriptorGrid grid_a = DescriptorGrid::zeros(scene.image_size_a[0], scene.image_size_a[1], dim);
  DescriptorGrid grid_b = DescriptorGrid::zeros(scene.image_size_b[0], scene.image_size_b[1], dim);
  fill_random_unit_cells(grid_a, rng);
  fill_random_unit_cells(grid_b, rng);

  for (int i : co_visible_indices(scene)) {
    const Eigen::VectorXd planted = rng.unit_vector(dim);
    const Eigen::VectorXd va = noise_sigma > 0.0 ? perturbed_unit(planted, noise_sigma, rng)
                                                 : planted;
    const Eigen::VectorXd vb = noise_sigma > 0.0 ? perturbed_unit(planted, noise_sigma, rng)
                                                 : planted;
    splat(grid_a, scene.pix_a[i], va);
    splat(grid_b, scene.pix_b[i], vb);
  }
  return {std::move(grid_a), std::move(grid_b)};
}

std::pair<KeypointSet, KeypointSet> co_visible_keypoints(const ScenePair& scene) {
  KeypointSet a, b;
  a.image_size = scene.image_size_a;
  b.image_size = scene.image_size_b;
  for (int i : co_visible_indices(scene)) {
    a.coords.push_back(scene.pix_a[i]);
    b.coords.push_back(scene.pix_b[i]);
  }
  return {std::move(a), std::move(b)};
}

void save_grid(const DescriptorGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kGridMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(grid.height));
  write_u32(out, static_cast<std::uint32_t>(grid.width));
  write_u32(out, static_cast<std::uint32_t>(grid.dim));
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(grid.data.data()),
            static_cast<std::streamsize>(grid.data.size() * sizeof(float)));
  if (!out) throw Error("short write to " + path.string());
}

DescriptorGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open grid file " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kGridMagic, 4) != 0) {
    throw BadMagic("grid file " + path.string() + ": bad magic");
  }
  DescriptorGrid grid;
  grid.height = static_cast<int>(read_u32(in));
  grid.width = static_cast<int>(read_u32(in));
  grid.dim = static_cast<int>(read_u32(in));
  if (!in) throw TruncatedFile("grid file " + path.string() + ": truncated header");
  if (grid.width <= 0 || grid.height <= 0 || grid.dim <= 0 ||
      static_cast<std::uint64_t>(grid.width) * grid.height * grid.dim > (1ULL << 31)) {
    throw DimensionMismatch("grid file " + path.string() + ": implausible dimensions");
  }
  grid.data.resize(static_cast<std::size_t>(grid.width) * grid.height * grid.dim);
  in.read(reinterpret_cast<char*>(grid.data.data()),
          static_cast<std::streamsize>(grid.data.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != grid.data.size() * sizeof(float)) {
    throw TruncatedFile("grid file " + path.string() + ": truncated payload");
  }
  return grid;
}

void save_keypoints(const KeypointSet& kps, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["image_size"] = kps.image_size;
  nlohmann::ordered_json coords = nlohmann::ordered_json::array();
  for (const auto& p : kps.coords) coords.push_back({p.x(), p.y()});
  j["keypoints"] = coords;
  if (kps.confidence) j["confidence"] = *kps.confidence;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

KeypointSet load_keypoints(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open keypoint file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("keypoint file " + path.string() + ": " + e.what());
  }

  try {
    KeypointSet kps;
    kps.image_size = {j.at("image_size").at(0).get<int>(), j.at("image_size").at(1).get<int>()};
    for (const auto& p : j.at("keypoints")) {
      kps.coords.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    if (j.contains("confidence")) {
      kps.confidence = j.at("confidence").get<std::vector<double>>();
      if (kps.confidence->size() != kps.coords.size()) {
        throw Error("keypoint file " + path.string() + ": confidence length mismatch");
      }
    }
    for (std::size_t i = 0; i < kps.coords.size(); ++i) {
      const auto& p = kps.coords[i];
      if (!(p.x() >= 0.0 && p.x() < kps.image_size[0] && p.y() >= 0.0 &&
            p.y() < kps.image_size[1])) {
        throw Error("keypoint file " + path.string() + ": keypoint " + std::to_string(i) +
                    " outside image bounds");
      }
    }
    return kps;
  } catch (const nlohmann::json::exception& e) {
    throw Error("keypoint file " + path.string() + ": " + e.what());
  }
}

}  // namespace oblimatch
