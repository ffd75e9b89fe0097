#pragma once

#include "nbv/camera.hpp"
#include "nbv/metrics.hpp"
#include "nbv/point_index.hpp"
#include "nbv/raycast.hpp"
#include "nbv/semantic_map.hpp"
#include "nbv/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace nbv {

struct FruitCluster {
  int id = 0;
  std::vector<Vec3> members;
  Vec3 centroid = Vec3::Zero();
  Aabb bounds;
};

/// DBSCAN labels per point: cluster id >= 0, or -1 for noise. A point is a
/// core point when at least `min_pts` points (itself included) lie within
/// distance <= eps. Clusters are numbered in order of their first core
/// point in the input; border points join the first cluster that reaches
/// them.
std::vector<int> dbscan_labels(std::span<const Vec3> points, double eps, int min_pts);

/// Clusters from `dbscan_labels`, noise dropped, members in input order.
std::vector<FruitCluster> cluster_targets(std::span<const Vec3> points, double eps, int min_pts);

enum class ViewpointStatus { kUnevaluated, kEvaluated, kFiltered, kExecuted };

struct ViewpointCandidate {
  CameraPose pose;
  Vec3 target = Vec3::Zero();  ///< point the camera looks at
  int cluster_id = -1;
  double utility = 0.0;
  ViewpointStatus status = ViewpointStatus::kUnevaluated;
};

/// N_theta elevations spread inclusively over [30, 150] degrees (measured
/// from +z) times N_phi azimuths over [0, 360), each at distance r from the
/// centroid and looking at it.
std::vector<ViewpointCandidate> sample_viewpoints(const Vec3& centroid, double radius, int n_theta, int n_phi,
                                                  int cluster_id = 0);

/// Reachable camera positions as a point cloud.
class WorkspaceModel {
 public:
  WorkspaceModel(std::vector<Vec3> points, double tolerance);

  /// Grid of points covering `box` with the given spacing (inclusive ends).
  static WorkspaceModel from_box(const Aabb& box, double spacing, double tolerance);
  /// One `x y z` triple per line; blank lines and `#` comments are skipped.
  static WorkspaceModel load_xyz(std::istream& in, double tolerance);

  double tolerance() const { return tolerance_; }
  const std::vector<Vec3>& points() const { return index_.points(); }
  bool reachable(const Vec3& p, double slack = 1.0) const { return index_.any_within(p, slack * tolerance_); }
  Vec3 nearest(const Vec3& p) const { return index_.points()[*index_.nearest(p)]; }

 private:
  PointIndex index_;
  double tolerance_;
};

/// Keeps candidates within tolerance of the workspace. Others are snapped
/// to the nearest workspace point when it is within twice the tolerance,
/// or else moved along their view ray toward the target to the first
/// reachable point, keeping at least half the original standoff. Moved
/// candidates are re-aimed at their target. Everything else is marked
/// filtered. Returns the number of candidates left unfiltered.
std::size_t filter_workspace(std::vector<ViewpointCandidate>& candidates, const WorkspaceModel& ws);

/// Marks candidates within `radius` of an already executed position as
/// executed so they are not proposed again. Returns how many were marked.
std::size_t mark_executed(std::vector<ViewpointCandidate>& candidates, std::span<const Vec3> executed,
                          double radius);

/// Marks candidates with an occupied voxel center (p_o > 0.5) within
/// `clearance` of the camera as filtered. Returns how many were marked.
std::size_t filter_clearance(std::vector<ViewpointCandidate>& candidates, const SemanticOctree& map,
                             double clearance);

/// How a candidate's ray bundle is built and traced.
struct EvalSettings {
  CameraModel camera;
  RaySamplingParams rays;
  SamplingMode mode = SamplingMode::kAdaptive;
  TraceOptions trace;
};

/// Scores every candidate that is neither filtered nor executed, stores the
/// utility, and returns the indices of the best k (utility descending, ties
/// by index). `rays_cast` accumulates the number of traced rays.
std::vector<std::size_t> select_best(std::vector<ViewpointCandidate>& candidates, const SemanticOctree& map,
                                     IgMetric metric, const IgContext& ctx, std::size_t k,
                                     const EvalSettings& settings, std::size_t* rays_cast = nullptr);

/// Length of the open path start -> points[order[0]] -> ... .
double path_length(std::span<const Vec3> points, const Vec3& start, std::span<const std::size_t> order);

/// Open tour from `start` through all points. Exact (Held-Karp) up to 12
/// points, nearest neighbor plus 2-opt beyond.
std::vector<std::size_t> order_viewpoints_tsp(std::span<const Vec3> points, const Vec3& start);

/// Observed free voxels (p_o < 0.5) with at least one unknown face
/// neighbor, sorted by key.
std::vector<VoxelKey> frontier_voxels(const SemanticOctree& map);

/// Random poses at distance `radius` around frontier voxels within max_dist
/// of a target (any frontier when none qualify), looking at the voxel.
/// Empty when the map has no frontier.
std::vector<ViewpointCandidate> frontier_candidates(const SemanticOctree& map, const IgContext& ctx,
                                                    std::size_t n_samples, std::uint64_t seed, double radius);

struct ScanArc {
  double radius = 0.5;
  double center_deg = 0.0;  ///< azimuth the arc is centered on
  double span_deg = 360.0;
};

/// Lattice of h heights times n/h azimuths, h the largest divisor of n not
/// above sqrt(n). Poses sit on a cylinder around the vertical axis through
/// the box center, at cell-centered heights over the box, looking
/// horizontally at the axis. Throws std::invalid_argument for an empty or
/// flat box or n < 1.
std::vector<CameraPose> predefined_scan_poses(const Aabb& region, int n_poses, const ScanArc& arc = {});

}  // namespace nbv
