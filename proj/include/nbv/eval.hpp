#pragma once

#include "nbv/scene.hpp"
#include "nbv/semantic_map.hpp"
#include "nbv/types.hpp"

#include <span>
#include <vector>

namespace nbv {

struct MetricSample {
  int viewpoint_idx = 0;
  double entropy_nats = 0.0;
  double coverage = 0.0;
  std::size_t rays_cast = 0;  ///< cumulative
  double map_ms = 0.0;
  double plan_ms = 0.0;
};

/// Bounds of every fruit primitive, grown by `margin` on each side.
std::vector<Aabb> fruit_boxes(const Scene& scene, double margin);

/// Sorted, duplicate-free keys whose voxel centers lie inside any box.
std::vector<VoxelKey> keys_in_boxes(std::span<const Aabb> boxes, double resolution);

/// Sum of H(x) over the voxels of `keys_in_boxes`; unknown voxels add ln K.
double total_fruit_entropy(const SemanticOctree& map, std::span<const Aabb> boxes);

/// Fraction of ground-truth points with a reconstructed point at distance
/// <= resolution. Throws std::invalid_argument when `truth` is empty.
double surface_coverage(std::span<const Vec3> reconstructed, std::span<const Vec3> truth, double resolution);

}  // namespace nbv
