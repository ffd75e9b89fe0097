#pragma once

#include "nbv/camera.hpp"
#include "nbv/scene.hpp"
#include "nbv/types.hpp"

#include <cstdint>
#include <vector>

namespace nbv {

/// Exact analytic rendering: each pixel takes the nearest primitive hit
/// with z-depth <= cam.max_depth; pixels without a hit are invalid.
LabeledDepthImage render(const Scene& scene, const CameraModel& cam, const CameraPose& pose);

/// Segmentation noise. Each 4-connected component of equal label among
/// valid pixels keeps its label with probability p_correct and otherwise
/// takes a class drawn uniformly from the other num_classes - 1.
LabeledDepthImage corrupt_labels(const LabeledDepthImage& obs, double p_correct, std::uint64_t seed,
                                 int num_classes = kDefaultNumClasses);

/// Number of 4-connected equal-label components among valid pixels.
int count_label_components(const LabeledDepthImage& obs);

struct SurfaceSamples {
  std::vector<Vec3> points;
  std::vector<int> labels;
  std::vector<int> primitive;  ///< index into Scene::primitives

  std::size_t size() const { return points.size(); }
  /// Subset with the given label.
  std::vector<Vec3> with_label(int label) const;
};

/// Area-uniform samples on every primitive surface, round(area * density)
/// per primitive (discs count one face). Occlusion is ignored.
SurfaceSamples ground_truth_surface(const Scene& scene, double density, std::uint64_t seed = 0);

}  // namespace nbv
