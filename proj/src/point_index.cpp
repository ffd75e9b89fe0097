#include "nbv/point_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nbv {

PointIndex::PointIndex(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()), cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("point index cell size must be positive");
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) throw std::length_error("too many points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const VoxelKey k = cell(points_[i]);
    buckets_[k].push_back(static_cast<std::uint32_t>(i));
    if (i == 0) {
      lo_ = hi_ = k;
    } else {
      lo_ = {std::min(lo_.x, k.x), std::min(lo_.y, k.y), std::min(lo_.z, k.z)};
      hi_ = {std::max(hi_.x, k.x), std::max(hi_.y, k.y), std::max(hi_.z, k.z)};
    }
  }
}

const std::vector<std::uint32_t>* PointIndex::bucket(const VoxelKey& k) const {
  auto it = buckets_.find(k);
  return it == buckets_.end() ? nullptr : &it->second;
}

std::optional<std::size_t> PointIndex::nearest(const Vec3& q) const {
  if (points_.empty()) return std::nullopt;
  const VoxelKey qk = cell(q);
  const int reach = std::max({std::abs(qk.x - lo_.x), std::abs(qk.x - hi_.x), std::abs(qk.y - lo_.y),
                              std::abs(qk.y - hi_.y), std::abs(qk.z - lo_.z), std::abs(qk.z - hi_.z)});
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  auto consider = [&](std::uint32_t i) {
    const double d2 = (points_[i] - q).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
      best_d2 = d2;
      best = i;
    }
  };
  if (reach > 48) {
    for (std::size_t i = 0; i < points_.size(); ++i) consider(static_cast<std::uint32_t>(i));
    return best;
  }
  for (int s = 0; s <= reach; ++s) {
    for (int dx = -s; dx <= s; ++dx) {
      for (int dy = -s; dy <= s; ++dy) {
        for (int dz = -s; dz <= s; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != s) continue;
          if (const auto* b = bucket({qk.x + dx, qk.y + dy, qk.z + dz})) {
            for (auto i : *b) consider(i);
          }
        }
      }
    }
    // Anything outside shell s is at least s cells away.
    const double bound = s * cell_size_;
    if (best_d2 < bound * bound) break;
  }
  return best;
}

bool PointIndex::any_within(const Vec3& q, double radius) const {
  if (points_.empty() || radius < 0.0) return false;
  const VoxelKey a = cell(q - Vec3::Constant(radius));
  const VoxelKey b = cell(q + Vec3::Constant(radius));
  const double r2 = radius * radius;
  for (int x = std::max(a.x, lo_.x); x <= std::min(b.x, hi_.x); ++x) {
    for (int y = std::max(a.y, lo_.y); y <= std::min(b.y, hi_.y); ++y) {
      for (int z = std::max(a.z, lo_.z); z <= std::min(b.z, hi_.z); ++z) {
        if (const auto* bk = bucket({x, y, z})) {
          for (auto i : *bk) {
            if ((points_[i] - q).squaredNorm() <= r2) return true;
          }
        }
      }
    }
  }
  return false;
}

std::vector<std::size_t> PointIndex::within(const Vec3& q, double radius) const {
  std::vector<std::size_t> out;
  if (points_.empty() || radius < 0.0) return out;
  const VoxelKey a = cell(q - Vec3::Constant(radius));
  const VoxelKey b = cell(q + Vec3::Constant(radius));
  const double r2 = radius * radius;
  for (int x = std::max(a.x, lo_.x); x <= std::min(b.x, hi_.x); ++x) {
    for (int y = std::max(a.y, lo_.y); y <= std::min(b.y, hi_.y); ++y) {
      for (int z = std::max(a.z, lo_.z); z <= std::min(b.z, hi_.z); ++z) {
        if (const auto* bk = bucket({x, y, z})) {
          for (auto i : *bk) {
            if ((points_[i] - q).squaredNorm() <= r2) out.push_back(i);
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace nbv
