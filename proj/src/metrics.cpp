#include "nbv/metrics.hpp"

#include "nbv/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace nbv {

IgMetric parse_ig_metric(std::string_view name) {
  if (name == "rs") return IgMetric::kRandom;
  if (name == "ae") return IgMetric::kAverageEntropy;
  if (name == "uvc") return IgMetric::kUnknownCount;
  if (name == "uvpc") return IgMetric::kUnknownProximityCount;
  if (name == "oae") return IgMetric::kOcclusionAwareEntropy;
  if (name == "mi") return IgMetric::kMutualInformation;
  if (name == "osamcep") return IgMetric::kOsamcep;
  throw std::invalid_argument("unknown metric: " + std::string(name));
}

std::string_view to_string(IgMetric metric) {
  switch (metric) {
    case IgMetric::kRandom:
      return "rs";
    case IgMetric::kAverageEntropy:
      return "ae";
    case IgMetric::kUnknownCount:
      return "uvc";
    case IgMetric::kUnknownProximityCount:
      return "uvpc";
    case IgMetric::kOcclusionAwareEntropy:
      return "oae";
    case IgMetric::kMutualInformation:
      return "mi";
    case IgMetric::kOsamcep:
      return "osamcep";
  }
  return "osamcep";
}

Eigen::MatrixXd default_confusion(int num_classes, double p_correct) {
  if (num_classes < 2) throw std::invalid_argument("confusion matrix needs at least two classes");
  if (!(p_correct >= 0.0 && p_correct <= 1.0)) throw std::invalid_argument("P_gt must lie in [0, 1]");
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(num_classes, num_classes, (1.0 - p_correct) / (num_classes - 1));
  c.diagonal().setConstant(p_correct);
  return c;
}

IgContext::IgContext(int target_class, double max_dist, std::shared_ptr<const PointIndex> targets,
                     Eigen::MatrixXd confusion)
    : target_class_(target_class), max_dist_(max_dist), targets_(std::move(targets)), confusion_(std::move(confusion)) {
  if (!(max_dist_ > 0.0)) throw std::invalid_argument("max_dist must be positive");
  if (confusion_.size() > 0) {
    if (confusion_.rows() != confusion_.cols()) throw std::invalid_argument("confusion matrix must be square");
    if ((confusion_.array() < 0.0).any() ||
        ((confusion_.rowwise().sum().array() - 1.0).abs() > 1e-9).any()) {
      throw std::invalid_argument("confusion matrix rows must be distributions");
    }
  }
}

bool IgContext::near_target(const VoxelKey& key, double resolution, const Vec3& fallback) const {
  const Vec3 c = center_of(key, resolution);
  if (!targets_ || targets_->empty()) return (c - fallback).norm() < max_dist_;
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  // any_within is inclusive; shrink by an ulp-scale margin for the strict test.
  const bool near = targets_->any_within(c, std::nextafter(max_dist_, 0.0));
  memo_.emplace(key, near);
  return near;
}

double channel_mutual_information(const ClassVector& prior, const Eigen::MatrixXd& confusion) {
  const Eigen::Index k = prior.size();
  if (confusion.rows() != k || confusion.cols() != k) throw std::invalid_argument("confusion size mismatch");
  const Eigen::VectorXd p_z = confusion.transpose() * prior.head(k);
  double mi = 0.0;
  for (Eigen::Index l = 0; l < k; ++l) {
    for (Eigen::Index z = 0; z < k; ++z) {
      const double joint = prior[l] * confusion(l, z);
      if (joint > 0.0) mi += joint * std::log(confusion(l, z) / p_z[z]);
    }
  }
  return std::max(0.0, mi);
}

double osamcep(const SemanticOctree& map, std::span<const RayTrace> traces, const IgContext& ctx,
               const Vec3& centroid) {
  const double h_unknown = std::log(static_cast<double>(map.num_classes()));
  double gain = 0.0;
  for (const auto& trace : traces) {
    for (const auto& e : trace.entries) {
      double h = 0.0;
      if (!e.voxel) {
        h = h_unknown;
      } else if (SemanticOctree::labeled_class(*e.voxel) == ctx.target_class()) {
        h = map.voxel_entropy(*e.voxel);
      } else {
        continue;
      }
      if (!ctx.near_target(e.key, map.resolution(), centroid)) continue;
      gain += e.p_v * h;
    }
  }
  return gain;
}

double average_entropy(const SemanticOctree&, std::span<const RayTrace> traces) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& trace : traces) {
    for (const auto& e : trace.entries) {
      sum += binary_entropy(e.p_o);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::size_t unknown_voxel_count(const SemanticOctree&, std::span<const RayTrace> traces) {
  std::unordered_set<VoxelKey, VoxelKeyHash> seen;
  for (const auto& trace : traces) {
    for (const auto& e : trace.entries) {
      if (!e.voxel) seen.insert(e.key);
    }
  }
  return seen.size();
}

std::size_t unknown_voxel_proximity_count(const SemanticOctree& map, std::span<const RayTrace> traces,
                                          const IgContext& ctx, const Vec3& centroid) {
  std::unordered_set<VoxelKey, VoxelKeyHash> seen;
  for (const auto& trace : traces) {
    for (const auto& e : trace.entries) {
      if (!e.voxel && ctx.near_target(e.key, map.resolution(), centroid)) seen.insert(e.key);
    }
  }
  return seen.size();
}

double occlusion_aware_entropy(const SemanticOctree&, std::span<const RayTrace> traces) {
  double gain = 0.0;
  for (const auto& trace : traces) {
    for (const auto& e : trace.entries) gain += e.p_v * binary_entropy(e.p_o);
  }
  return gain;
}

double mutual_information(const SemanticOctree& map, std::span<const RayTrace> traces, const IgContext& ctx) {
  const int k = map.num_classes();
  const Eigen::MatrixXd& c = ctx.confusion();
  if (c.rows() != k) throw std::invalid_argument("confusion matrix does not match the map's class count");
  const double mi_unknown = channel_mutual_information(ClassVector::Constant(k, 1.0 / k), c);
  double gain = 0.0;
  for (const auto& trace : traces) {
    for (const auto& e : trace.entries) {
      const double mi = e.voxel ? channel_mutual_information(map.class_distribution(*e.voxel), c) : mi_unknown;
      gain += e.p_v * mi;
    }
  }
  return gain;
}

double random_utility(std::uint64_t seed, std::uint64_t candidate_index) {
  const std::uint64_t h = splitmix64(splitmix64(seed) ^ splitmix64(candidate_index * 0x9e3779b97f4a7c15ULL + 1));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double evaluate_metric(IgMetric metric, const SemanticOctree& map, const RayBundle& bundle, const IgContext& ctx,
                       const TraceOptions& trace, std::uint64_t candidate_index) {
  if (metric == IgMetric::kRandom) return random_utility(ctx.rs_seed, candidate_index);
  const std::vector<RayTrace> traces = trace_bundle(map, bundle, trace);
  switch (metric) {
    case IgMetric::kAverageEntropy:
      return average_entropy(map, traces);
    case IgMetric::kUnknownCount:
      return static_cast<double>(unknown_voxel_count(map, traces));
    case IgMetric::kUnknownProximityCount:
      return static_cast<double>(unknown_voxel_proximity_count(map, traces, ctx, bundle.centroid));
    case IgMetric::kOcclusionAwareEntropy:
      return occlusion_aware_entropy(map, traces);
    case IgMetric::kMutualInformation:
      return mutual_information(map, traces, ctx);
    case IgMetric::kOsamcep:
      return osamcep(map, traces, ctx, bundle.centroid);
    case IgMetric::kRandom:
      break;
  }
  return 0.0;
}

}  // namespace nbv
