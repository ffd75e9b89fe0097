#pragma once

#include "nbv/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace nbv {

/// Uniform-grid bucket index over a fixed point set. Queries are exact.
class PointIndex {
 public:
  PointIndex() = default;
  PointIndex(std::span<const Vec3> points, double cell_size);

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  /// Index of the closest point (lowest index on ties), nullopt if empty.
  std::optional<std::size_t> nearest(const Vec3& q) const;
  /// True if some point lies at distance <= radius.
  bool any_within(const Vec3& q, double radius) const;
  /// All point indices within distance <= radius, ascending.
  std::vector<std::size_t> within(const Vec3& q, double radius) const;

 private:
  VoxelKey cell(const Vec3& p) const { return key_of(p, cell_size_); }
  const std::vector<std::uint32_t>* bucket(const VoxelKey& k) const;

  std::vector<Vec3> points_;
  double cell_size_ = 1.0;
  std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> buckets_;
  VoxelKey lo_{}, hi_{};
};

}  // namespace nbv
