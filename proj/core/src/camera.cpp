// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/camera.hpp"

#include <stdexcept>

namespace glossplat {

Camera::Camera(const Intrinsics& intrinsics, const Mat3& rotation, const Vec3& position)
    : intrinsics_(intrinsics), rotation_(rotation), position_(position) {
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0))
    throw std::invalid_argument("Camera: focal lengths must be positive");
  if (intrinsics.width < 1 || intrinsics.height < 1)
    throw std::invalid_argument("Camera: image size must be at least 1x1");
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-9)) throw std::invalid_argument("Camera: rotation is not orthonormal");
}

Camera Camera::from_gl_camera_to_world(const Intrinsics& intrinsics, const Mat4& c2w) {
  Mat3 r = c2w.topLeftCorner<3, 3>();
  r.col(1) = -r.col(1);
  r.col(2) = -r.col(2);
  return Camera(intrinsics, r, c2w.topRightCorner<3, 1>());
}

Camera Camera::look_at(const Intrinsics& intrinsics, const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 fwd = (target - eye).normalized();
  Vec3 right = fwd.cross(up);
  if (right.norm() < 1e-9) right = fwd.unitOrthogonal();
  right.normalize();
  const Vec3 down = fwd.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = fwd;
  return Camera(intrinsics, r, eye);
}

Ray Camera::pixel_ray(int x, int y) const {
  const Vec3 dc((x + 0.5 - intrinsics_.cx) / intrinsics_.fx, (y + 0.5 - intrinsics_.cy) / intrinsics_.fy, 1.0);
  const Vec3 dir = rotation_ * dc;
  return {position_, dir / dir.norm()};
}

Intrinsics intrinsics_from_fov(int width, int height, double fov_x) {
  Intrinsics k;
  k.width = width;
  k.height = height;
  k.fx = width / (2.0 * std::tan(0.5 * fov_x));
  k.fy = k.fx;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  return k;
}

}  // namespace glossplat
