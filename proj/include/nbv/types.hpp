#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

namespace nbv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Class ids used by the simulator. Fruit comes first so that ties in the
/// categorical argmax resolve toward the target class.
enum SemanticClass : int { kFruit = 0, kLeaf = 1, kBackground = 2 };

inline constexpr int kDefaultNumClasses = 3;
inline constexpr int kMaxClasses = 8;

/// Integer grid coordinates of a voxel at a fixed map resolution.
struct VoxelKey {
  int x = 0;
  int y = 0;
  int z = 0;

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    // Large odd multipliers, same idea as the spatial hashing in voxblox.
    auto h = static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.x)) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.y)) * 19349669ULL;
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.z)) * 83492791ULL;
    h ^= h >> 29;
    return static_cast<std::size_t>(h * 0xbf58476d1ce4e5b9ULL);
  }
};

template <typename Scalar>
inline VoxelKey key_of(const Eigen::Matrix<Scalar, 3, 1>& p, Scalar resolution) {
  return {static_cast<int>(std::floor(p.x() / resolution)),
          static_cast<int>(std::floor(p.y() / resolution)),
          static_cast<int>(std::floor(p.z() / resolution))};
}

template <typename Scalar = double>
inline Eigen::Matrix<Scalar, 3, 1> center_of(const VoxelKey& k, Scalar resolution) {
  return {(static_cast<Scalar>(k.x) + Scalar(0.5)) * resolution,
          (static_cast<Scalar>(k.y) + Scalar(0.5)) * resolution,
          (static_cast<Scalar>(k.z) + Scalar(0.5)) * resolution};
}

/// Axis-aligned box.
struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (max.array() < min.array()).any(); }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  Aabb inflated(double margin) const {
    return {(min.array() - margin).matrix(), (max.array() + margin).matrix()};
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 size() const { return max - min; }
};

}  // namespace nbv
