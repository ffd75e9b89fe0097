#pragma once

#include "nbv/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <optional>

namespace nbv {

/// Pinhole intrinsics. Pixel (u, v) has its center at integer coordinates,
/// so the optical axis passes through pixel (cx, cy).
struct CameraModel {
  int width = 400;
  int height = 400;
  double fx = 400.0;
  double fy = 400.0;
  double cx = 200.0;
  double cy = 200.0;
  double max_depth = 2.0;

  /// Throws std::invalid_argument on non-positive focal lengths or a
  /// principal point outside the image.
  void validate() const;

  /// Camera-frame direction through pixel (u, v), scaled so that z == 1.
  Vec3 pixel_direction(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }

  /// Pixel coordinates of a camera-frame point, or nullopt if it is not in
  /// front of the camera.
  std::optional<Eigen::Vector2d> project(const Vec3& p_cam) const {
    if (p_cam.z() <= 0.0) return std::nullopt;
    return Eigen::Vector2d(fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy);
  }

  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

/// Camera-to-world transform. Camera frame: x right, y down, z forward.
struct CameraPose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  Vec3 forward() const { return rotation.col(2); }
  Vec3 to_world(const Vec3& p_cam) const { return rotation * p_cam + position; }
  Vec3 to_camera(const Vec3& p_world) const { return rotation.transpose() * (p_world - position); }

  bool is_orthonormal(double tol = 1e-6) const;

  /// Pose at `eye` looking at `target`, rolled so that image "up" follows
  /// `up` as closely as possible.
  static CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());
};

using DepthImage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LabelImage = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Depth (z along the optical axis, meters) and per-pixel class ids, both
/// indexed (row v, column u). Invalid depth is NaN and carries the
/// background label.
struct LabeledDepthImage {
  DepthImage depth;
  LabelImage label;

  LabeledDepthImage() = default;
  LabeledDepthImage(int width, int height)
      : depth(DepthImage::Constant(height, width, std::numeric_limits<double>::quiet_NaN())),
        label(LabelImage::Constant(height, width, kBackground)) {}

  int width() const { return static_cast<int>(depth.cols()); }
  int height() const { return static_cast<int>(depth.rows()); }
  static bool valid(double d) { return std::isfinite(d) && d > 0.0; }
};

}  // namespace nbv
