#include "nbv/camera.hpp"

#include <Eigen/Geometry>

#include <stdexcept>

namespace nbv {

void CameraModel::validate() const {
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera image size must be positive");
  if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("focal lengths must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw std::invalid_argument("principal point outside the image");
  }
  if (!(max_depth > 0.0)) throw std::invalid_argument("camera max depth must be positive");
}

bool CameraPose::is_orthonormal(double tol) const {
  if (!rotation.allFinite() || !position.allFinite()) return false;
  const double err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return err <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 delta = target - eye;
  if (!(delta.norm() > 0.0)) throw std::invalid_argument("look_at target coincides with the eye");
  const Vec3 forward = delta.normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) {
    // Looking straight along `up`; pick any perpendicular reference.
    right = forward.cross(std::abs(forward.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
  }
  right.normalize();
  const Vec3 down = forward.cross(right);
  CameraPose pose;
  pose.position = eye;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  return pose;
}

}  // namespace nbv
