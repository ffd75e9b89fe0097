#pragma once

#include "nbv/camera.hpp"
#include "nbv/semantic_map.hpp"
#include "nbv/types.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace nbv {

/// Amanatides-Woo traversal of the grid cells crossed by the segment
/// [origin, origin + length * dir]. `visit(key, t_enter, t_exit)` is called
/// in order for every cell the segment passes through with t_enter < length;
/// returning false stops the walk. `dir` must be unit length.
template <typename Visit>
void walk_cells(const Vec3& origin, const Vec3& dir, double length, double resolution, Visit&& visit) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  VoxelKey k = key_of(origin, resolution);
  int step[3];
  double t_max[3];
  double t_delta[3];
  const int idx[3] = {k.x, k.y, k.z};
  for (int a = 0; a < 3; ++a) {
    const double d = dir[a];
    if (d > 0.0) {
      step[a] = 1;
      t_max[a] = ((idx[a] + 1) * resolution - origin[a]) / d;
      t_delta[a] = resolution / d;
    } else if (d < 0.0) {
      step[a] = -1;
      t_max[a] = (idx[a] * resolution - origin[a]) / d;
      t_delta[a] = -resolution / d;
    } else {
      step[a] = 0;
      t_max[a] = kInf;
      t_delta[a] = kInf;
    }
  }
  double t = 0.0;
  while (true) {
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    const double t_exit = std::min(t_max[axis], length);
    if (!visit(k, t, t_exit)) return;
    if (t_max[axis] >= length) return;
    t = t_max[axis];
    t_max[axis] += t_delta[axis];
    if (axis == 0) {
      k.x += step[0];
    } else if (axis == 1) {
      k.y += step[1];
    } else {
      k.z += step[2];
    }
  }
}

enum class TraceEnd { kMaxRange, kVisibilityCutoff, kBounds };

struct TraceEntry {
  VoxelKey key;
  const SemanticVoxel* voxel = nullptr;  ///< null when unknown
  double p_o = 0.5;
  double p_v = 1.0;  ///< probability the voxel is unoccluded from the origin
};

struct RayTrace {
  std::vector<TraceEntry> entries;
  TraceEnd end = TraceEnd::kMaxRange;
};

struct TraceOptions {
  double max_range = 1.0;
  /// Stop once the visibility of the next voxel would drop below this.
  double visibility_cutoff = 0.01;
  std::optional<Aabb> bounds;
};

/// Walks a ray through the map accumulating visibility
/// P_v(x_n) = prod_{i<n} (1 - p_o(x_i)); unknown voxels count as p_o = 0.5.
/// Throws std::invalid_argument for a zero direction or non-positive range.
RayTrace traverse_ray(const SemanticOctree::Reader& map, const Vec3& origin, const Vec3& direction,
                      const TraceOptions& opts);
RayTrace traverse_ray(const SemanticOctree& map, const Vec3& origin, const Vec3& direction,
                      const TraceOptions& opts);

/// Pixel step for distance-adaptive downsampling: max(1, round(res * fx / z)).
int downsample_step(double resolution, double fx, double z);

struct PixelBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;
  double side = 0.0;  ///< unclipped side length b

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
};

/// Square region of side b = round(size * fx / z) pixels centered on
/// `centroid_px`, clipped to the image. Pixel u covers [u - 0.5, u + 0.5).
PixelBox roi_pixel_box(double cluster_size, double fx, double z, const Eigen::Vector2d& centroid_px,
                       const CameraModel& cam);

enum class SamplingMode { kAdaptive, kDense, kSparse };

SamplingMode parse_sampling_mode(std::string_view name);
std::string_view to_string(SamplingMode mode);

struct RayBundle {
  CameraPose pose;
  Vec3 centroid = Vec3::Zero();
  std::vector<Vec3> directions;  ///< world frame, unit length
  int step = 1;
  PixelBox roi;
};

struct RaySamplingParams {
  double resolution = 0.015;
  double cluster_size = 0.1;
  int dense_grid = 28;
  int sparse_grid = 6;
};

/// Rays used to score a viewpoint. Adaptive mode places a lattice with step
/// `downsample_step` inside the ROI box around the projected centroid; dense
/// and sparse modes use a uniform grid over the whole image. Throws
/// std::invalid_argument when the centroid is behind the camera.
RayBundle generate_rays(const CameraModel& cam, const CameraPose& pose, const Vec3& centroid,
                        const RaySamplingParams& params, SamplingMode mode = SamplingMode::kAdaptive);

std::vector<RayTrace> trace_bundle(const SemanticOctree& map, const RayBundle& bundle,
                                   const TraceOptions& opts);

}  // namespace nbv
