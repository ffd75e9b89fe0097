#include "nbv/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nbv {

namespace {

bool segment_leaves_box(const Aabb& box, const Vec3& p) { return !box.contains(p); }

}  // namespace

RayTrace traverse_ray(const SemanticOctree::Reader& map, const Vec3& origin, const Vec3& direction,
                      const TraceOptions& opts) {
  const double n = direction.norm();
  if (!(n > 0.0) || !direction.allFinite()) throw std::invalid_argument("ray direction must be non-zero");
  if (!(opts.max_range > 0.0)) throw std::invalid_argument("ray range must be positive");
  const Vec3 dir = direction / n;
  const double res = map.map().resolution();

  RayTrace trace;
  double visibility = 1.0;
  walk_cells(origin, dir, opts.max_range, res, [&](const VoxelKey& k, double, double) {
    if (opts.bounds && segment_leaves_box(*opts.bounds, center_of(k, res))) {
      trace.end = TraceEnd::kBounds;
      return false;
    }
    if (visibility < opts.visibility_cutoff) {
      trace.end = TraceEnd::kVisibilityCutoff;
      return false;
    }
    const SemanticVoxel* voxel = map.find(k);
    const double p_o = voxel ? voxel->occupancy() : 0.5;
    trace.entries.push_back({k, voxel, p_o, visibility});
    visibility *= 1.0 - p_o;
    return true;
  });
  return trace;
}

RayTrace traverse_ray(const SemanticOctree& map, const Vec3& origin, const Vec3& direction,
                      const TraceOptions& opts) {
  return traverse_ray(SemanticOctree::Reader(map), origin, direction, opts);
}

int downsample_step(double resolution, double fx, double z) {
  if (!(resolution > 0.0) || !(fx > 0.0) || !(z > 0.0)) {
    throw std::invalid_argument("downsampling inputs must be positive");
  }
  const double raw = resolution * fx / z;
  return std::max(1, static_cast<int>(std::floor(raw + 0.5)));
}

PixelBox roi_pixel_box(double cluster_size, double fx, double z, const Eigen::Vector2d& centroid_px,
                       const CameraModel& cam) {
  if (!(cluster_size > 0.0) || !(fx > 0.0) || !(z > 0.0)) {
    throw std::invalid_argument("ROI inputs must be positive");
  }
  const double side = std::floor(cluster_size * fx / z + 0.5);
  PixelBox box;
  box.side = side;
  box.u_min = std::max(centroid_px.x() - side / 2.0, -0.5);
  box.v_min = std::max(centroid_px.y() - side / 2.0, -0.5);
  box.u_max = std::min(centroid_px.x() + side / 2.0, cam.width - 0.5);
  box.v_max = std::min(centroid_px.y() + side / 2.0, cam.height - 0.5);
  return box;
}

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "adaptive") return SamplingMode::kAdaptive;
  if (name == "dense") return SamplingMode::kDense;
  if (name == "sparse") return SamplingMode::kSparse;
  throw std::invalid_argument("unknown sampling mode: " + std::string(name));
}

std::string_view to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::kAdaptive:
      return "adaptive";
    case SamplingMode::kDense:
      return "dense";
    case SamplingMode::kSparse:
      return "sparse";
  }
  return "adaptive";
}

RayBundle generate_rays(const CameraModel& cam, const CameraPose& pose, const Vec3& centroid,
                        const RaySamplingParams& params, SamplingMode mode) {
  RayBundle bundle;
  bundle.pose = pose;
  bundle.centroid = centroid;
  auto push = [&](double u, double v) {
    bundle.directions.push_back((pose.rotation * cam.pixel_direction(u, v)).normalized());
  };

  if (mode != SamplingMode::kAdaptive) {
    const int n = mode == SamplingMode::kDense ? params.dense_grid : params.sparse_grid;
    const double su = static_cast<double>(cam.width) / n;
    const double sv = static_cast<double>(cam.height) / n;
    bundle.step = static_cast<int>(std::lround(su));
    bundle.roi = {-0.5, -0.5, cam.width - 0.5, cam.height - 0.5, static_cast<double>(cam.width)};
    bundle.directions.reserve(static_cast<std::size_t>(n * n));
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) push(-0.5 + (i + 0.5) * su, -0.5 + (j + 0.5) * sv);
    }
    return bundle;
  }

  const Vec3 c_cam = pose.to_camera(centroid);
  const auto px = cam.project(c_cam);
  if (!px) throw std::invalid_argument("cluster centroid is behind the camera");
  const double z = c_cam.norm();
  bundle.step = downsample_step(params.resolution, cam.fx, z);
  const PixelBox full = roi_pixel_box(params.cluster_size, cam.fx, z, *px, cam);
  bundle.roi = full;

  // Lattice anchored on the unclipped box so that clipping only drops rays.
  const int per_axis = static_cast<int>(std::ceil(full.side / bundle.step - 1e-9));
  const double u0 = px->x() - full.side / 2.0 + bundle.step / 2.0;
  const double v0 = px->y() - full.side / 2.0 + bundle.step / 2.0;
  bundle.directions.reserve(static_cast<std::size_t>(per_axis * per_axis));
  for (int j = 0; j < per_axis; ++j) {
    const double v = v0 + j * bundle.step;
    if (v < full.v_min || v >= full.v_max) continue;
    for (int i = 0; i < per_axis; ++i) {
      const double u = u0 + i * bundle.step;
      if (u < full.u_min || u >= full.u_max) continue;
      push(u, v);
    }
  }
  return bundle;
}

std::vector<RayTrace> trace_bundle(const SemanticOctree& map, const RayBundle& bundle, const TraceOptions& opts) {
  SemanticOctree::Reader reader(map);
  std::vector<RayTrace> traces;
  traces.reserve(bundle.directions.size());
  for (const auto& d : bundle.directions) traces.push_back(traverse_ray(reader, bundle.pose.position, d, opts));
  return traces;
}

}  // namespace nbv
