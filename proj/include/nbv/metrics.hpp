#pragma once

#include "nbv/point_index.hpp"
#include "nbv/raycast.hpp"
#include "nbv/semantic_map.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>

namespace nbv {

/// Viewpoint utility functions.
enum class IgMetric {
  kRandom,                  ///< RS
  kAverageEntropy,          ///< AE
  kUnknownCount,            ///< UVC
  kUnknownProximityCount,   ///< UVPC
  kOcclusionAwareEntropy,   ///< OAE
  kMutualInformation,       ///< MI
  kOsamcep,                 ///< occlusion and semantic aware multi-class entropy with proximity
};

IgMetric parse_ig_metric(std::string_view name);
std::string_view to_string(IgMetric metric);

/// Row-stochastic K x K matrix: P_gt on the diagonal, the rest spread
/// evenly over the wrong classes.
Eigen::MatrixXd default_confusion(int num_classes, double p_correct);

/// Everything a metric needs beyond the traces.
class IgContext {
 public:
  IgContext() = default;
  IgContext(int target_class, double max_dist, std::shared_ptr<const PointIndex> targets,
            Eigen::MatrixXd confusion);

  int target_class() const { return target_class_; }
  double max_dist() const { return max_dist_; }
  const PointIndex* targets() const { return targets_.get(); }
  const Eigen::MatrixXd& confusion() const { return confusion_; }

  std::uint64_t rs_seed = 0;

  /// dist(x) < max_dist, where dist is measured to the nearest target voxel
  /// center, or to `fallback` when there are no targets. Results for the
  /// target set are memoized per key; not thread-safe.
  bool near_target(const VoxelKey& key, double resolution, const Vec3& fallback) const;

 private:
  int target_class_ = kFruit;
  double max_dist_ = 0.1;
  std::shared_ptr<const PointIndex> targets_;
  Eigen::MatrixXd confusion_;
  mutable std::unordered_map<VoxelKey, bool, VoxelKeyHash> memo_;
};

/// I(l; z) for a categorical prior pushed through a confusion channel
/// (rows: true class, columns: measured class), in nats.
double channel_mutual_information(const ClassVector& prior, const Eigen::MatrixXd& confusion);

/// Sum over rays and voxels of P_v(x) * H(x) for voxels that are unknown or
/// labeled as the target class, and lie within max_dist of a target.
double osamcep(const SemanticOctree& map, std::span<const RayTrace> traces, const IgContext& ctx,
               const Vec3& centroid);
double average_entropy(const SemanticOctree& map, std::span<const RayTrace> traces);
std::size_t unknown_voxel_count(const SemanticOctree& map, std::span<const RayTrace> traces);
std::size_t unknown_voxel_proximity_count(const SemanticOctree& map, std::span<const RayTrace> traces,
                                          const IgContext& ctx, const Vec3& centroid);
double occlusion_aware_entropy(const SemanticOctree& map, std::span<const RayTrace> traces);
double mutual_information(const SemanticOctree& map, std::span<const RayTrace> traces, const IgContext& ctx);

/// Deterministic value in [0, 1) per (seed, index).
double random_utility(std::uint64_t seed, std::uint64_t candidate_index);

/// Bundle-level entry point used by the planner.
double evaluate_metric(IgMetric metric, const SemanticOctree& map, const RayBundle& bundle, const IgContext& ctx,
                       const TraceOptions& trace, std::uint64_t candidate_index);

}  // namespace nbv
