#pragma once

#include "nbv/camera.hpp"
#include "nbv/types.hpp"

#include <Eigen/Core>

#include <array>
#include <bitset>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace nbv {

template <typename Scalar>
inline Scalar logit(Scalar p) {
  return std::log(p / (Scalar(1) - p));
}

template <typename Scalar>
inline Scalar sigmoid(Scalar l) {
  return Scalar(1) / (Scalar(1) + std::exp(-l));
}

/// Shannon entropy in nats; zero-probability terms contribute nothing.
template <typename Derived>
typename Derived::Scalar categorical_entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > Scalar(0)) h -= p[i] * std::log(p[i]);
  }
  return h;
}

template <typename Scalar>
inline Scalar binary_entropy(Scalar p) {
  Scalar h(0);
  if (p > Scalar(0)) h -= p * std::log(p);
  if (p < Scalar(1)) h -= (Scalar(1) - p) * std::log(Scalar(1) - p);
  return h;
}

/// Fixed-capacity class vector; lives inline in each voxel.
using ClassVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxClasses, 1>;

/// Inverse sensor model for occupancy, in probability space.
struct SensorModel {
  double p_hit = 0.85;
  double p_miss = 0.40;
  double p_min = 0.12;
  double p_max = 0.97;

  double log_hit() const { return logit(p_hit); }
  double log_miss() const { return logit(p_miss); }
  double log_min() const { return logit(p_min); }
  double log_max() const { return logit(p_max); }
};

struct MapParams {
  double resolution = 0.015;
  int num_classes = kDefaultNumClasses;
  int target_class = kFruit;
  double max_range = 1.0;
  double dirichlet_alpha = 1.0;
  /// Treat invalid pixels as returns beyond max_range (free space up to
  /// max_range). Right for a simulated sensor where invalid means no surface.
  bool clear_no_return = false;
  SensorModel sensor;
};

struct SemanticVoxel {
  double occ_logodds = 0.0;
  ClassVector class_counts;
  std::uint64_t last_update = 0;

  double occupancy() const { return sigmoid(occ_logodds); }
  double total_count() const { return class_counts.sum(); }
};

struct UpdateStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t new_voxels = 0;

  friend bool operator==(const UpdateStats&, const UpdateStats&) = default;
};

/// Sparse multi-class occupancy map. Voxels live in 8x8x8 blocks keyed by a
/// hash of the block coordinate; a key that was never touched is unknown
/// (p_o = 0.5, uniform class distribution).
class SemanticOctree {
 public:
  static constexpr int kBlockBits = 3;
  static constexpr int kBlockSide = 1 << kBlockBits;
  static constexpr int kBlockVolume = kBlockSide * kBlockSide * kBlockSide;

  struct Block {
    std::bitset<kBlockVolume> present;
    std::array<SemanticVoxel, kBlockVolume> voxels;
  };

  explicit SemanticOctree(MapParams params = {});

  const MapParams& params() const { return params_; }
  double resolution() const { return params_.resolution; }
  int num_classes() const { return params_.num_classes; }
  std::size_t size() const { return size_; }
  std::uint64_t sequence() const { return sequence_; }
  std::uint64_t advance_sequence() { return ++sequence_; }

  VoxelKey key(const Vec3& p) const { return key_of(p, params_.resolution); }
  Vec3 center(const VoxelKey& k) const { return center_of(k, params_.resolution); }

  const SemanticVoxel* find(const VoxelKey& k) const;

  /// Returns the voxel for `k`, creating it in the unknown state if absent.
  SemanticVoxel& touch(const VoxelKey& k, bool* created = nullptr);

  /// Overwrites a voxel (deserialization, tests). Values are clamped.
  void set_voxel(const VoxelKey& k, double occ_logodds, const ClassVector& counts);

  void apply_hit(const VoxelKey& k, int label, bool* created = nullptr);
  void apply_miss(const VoxelKey& k, bool* created = nullptr);

  double occupancy(const VoxelKey& k) const;
  ClassVector class_distribution(const VoxelKey& k) const;
  ClassVector class_distribution(const SemanticVoxel& v) const;
  double voxel_entropy(const VoxelKey& k) const;
  double voxel_entropy(const SemanticVoxel& v) const;

  /// Argmax class of a voxel that has at least one class observation; ties
  /// go to the lowest index. Free-only voxels carry no label.
  static std::optional<int> labeled_class(const SemanticVoxel& v);

  /// Visits every stored voxel as (key, voxel). Order is unspecified.
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [bk, block] : blocks_) {
      for (int i = 0; i < kBlockVolume; ++i) {
        if (!block->present[static_cast<std::size_t>(i)]) continue;
        f(VoxelKey{(bk.x << kBlockBits) | (i & 7), (bk.y << kBlockBits) | ((i >> 3) & 7),
                   (bk.z << kBlockBits) | ((i >> 6) & 7)},
          block->voxels[static_cast<std::size_t>(i)]);
      }
    }
  }

  std::vector<VoxelKey> sorted_keys() const;

  /// Read cursor that caches the last block; cheap for ray-coherent access.
  /// One per thread.
  class Reader {
   public:
    explicit Reader(const SemanticOctree& map) : map_(&map) {}
    const SemanticVoxel* find(const VoxelKey& k) const;
    double occupancy(const VoxelKey& k) const {
      const SemanticVoxel* v = find(k);
      return v ? v->occupancy() : 0.5;
    }
    const SemanticOctree& map() const { return *map_; }

   private:
    const SemanticOctree* map_;
    mutable VoxelKey cached_key_{};
    mutable const Block* cached_ = nullptr;
    mutable bool has_cache_ = false;
  };

 private:
  static VoxelKey block_of(const VoxelKey& k) {
    return {k.x >> kBlockBits, k.y >> kBlockBits, k.z >> kBlockBits};
  }
  static std::size_t index_in_block(const VoxelKey& k) {
    return static_cast<std::size_t>((k.x & 7) | ((k.y & 7) << 3) | ((k.z & 7) << 6));
  }
  const Block* find_block(const VoxelKey& bk) const;

  MapParams params_;
  std::unordered_map<VoxelKey, std::unique_ptr<Block>, VoxelKeyHash> blocks_;
  std::size_t size_ = 0;
  std::uint64_t sequence_ = 0;
};

/// Fuses one labeled depth image into the map. Each voxel is updated at most
/// once per call: endpoint voxels get one hit and one count for the majority
/// pixel label inside them; voxels crossed on the way get one miss. One
/// free-space ray is cast per distinct endpoint voxel, aimed at the mean of
/// the measured points inside it.
/// Throws std::invalid_argument on a non-orthonormal pose or when the image
/// size does not match the camera.
UpdateStats integrate_observation(SemanticOctree& map, const CameraPose& pose,
                                  const LabeledDepthImage& obs, const CameraModel& cam);

/// Centers of voxels with p_o >= p_o_min whose argmax class is `cls`,
/// sorted by key.
std::vector<Vec3> classified_voxels(const SemanticOctree& map, int cls, double p_o_min = 0.5);

/// Text format: header `semmap v1 resolution=<r> K=<K>`, then one
/// `ix iy iz occ_logodds c_0 ... c_{K-1}` line per voxel in key order.
void save_map(std::ostream& out, const SemanticOctree& map);
SemanticOctree load_map(std::istream& in, MapParams defaults = {});

/// ASCII PLY with a per-vertex `class` property.
void write_ply(std::ostream& out, std::span<const Vec3> points, std::span<const int> classes);

}  // namespace nbv
