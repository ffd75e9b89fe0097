#include "nbv/eval.hpp"

#include "nbv/point_index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nbv {

std::vector<Aabb> fruit_boxes(const Scene& scene, double margin) {
  std::vector<Aabb> boxes;
  for (const Primitive* f : scene.fruits()) boxes.push_back(f->bounds().inflated(margin));
  return boxes;
}

std::vector<VoxelKey> keys_in_boxes(std::span<const Aabb> boxes, double resolution) {
  std::vector<VoxelKey> keys;
  for (const auto& b : boxes) {
    if (b.empty()) continue;
    // Center (i + 0.5) * res inside [min, max].
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<int>(std::ceil(b.min[a] / resolution - 0.5));
      hi[a] = static_cast<int>(std::floor(b.max[a] / resolution - 0.5));
    }
    for (int x = lo[0]; x <= hi[0]; ++x) {
      for (int y = lo[1]; y <= hi[1]; ++y) {
        for (int z = lo[2]; z <= hi[2]; ++z) keys.push_back({x, y, z});
      }
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

double total_fruit_entropy(const SemanticOctree& map, std::span<const Aabb> boxes) {
  double h = 0.0;
  for (const auto& k : keys_in_boxes(boxes, map.resolution())) h += map.voxel_entropy(k);
  return h;
}

double surface_coverage(std::span<const Vec3> reconstructed, std::span<const Vec3> truth, double resolution) {
  if (truth.empty()) throw std::invalid_argument("coverage needs ground-truth points");
  if (!(resolution > 0.0)) throw std::invalid_argument("coverage threshold must be positive");
  if (reconstructed.empty()) return 0.0;
  const PointIndex index(reconstructed, resolution);
  std::size_t hit = 0;
  for (const auto& p : truth) {
    if (index.any_within(p, resolution)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace nbv
