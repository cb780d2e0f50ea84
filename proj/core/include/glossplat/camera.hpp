// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/math.hpp"
#include "glossplat/surfel.hpp"

namespace glossplat {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
};

/// Pinhole camera. Camera axes follow the x-right, y-down, z-forward convention;
/// `rotation` maps camera axes to world axes and `position` is the center.
class Camera {
 public:
  Camera() = default;
  Camera(const Intrinsics& intrinsics, const Mat3& rotation, const Vec3& position);

  /// Builds from a camera-to-world 4x4 in the x-right, y-up, z-backward
  /// convention used by NeRF-style transforms files.
  static Camera from_gl_camera_to_world(const Intrinsics& intrinsics, const Mat4& c2w);

  /// Camera at `eye` looking at `target`, `up` roughly upwards in the image.
  static Camera look_at(const Intrinsics& intrinsics, const Vec3& eye, const Vec3& target, const Vec3& up);

  const Intrinsics& intrinsics() const { return intrinsics_; }
  int width() const { return intrinsics_.width; }
  int height() const { return intrinsics_.height; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& position() const { return position_; }
  Vec3 forward() const { return rotation_.col(2); }

  /// Ray through the center of pixel (x, y).
  Ray pixel_ray(int x, int y) const;

  /// Depth of a world point along the view axis.
  double view_depth(const Vec3& p) const { return (p - position_).dot(rotation_.col(2)); }

  Vec3 world_to_camera(const Vec3& p) const { return rotation_.transpose() * (p - position_); }

  /// Pixel coordinates of a camera-space point with z > 0.
  Vec2 project_camera(const Vec3& pc) const {
    return {intrinsics_.fx * pc.x() / pc.z() + intrinsics_.cx, intrinsics_.fy * pc.y() / pc.z() + intrinsics_.cy};
  }

  /// Camera with rotation and position premultiplied by `r`.
  Camera transformed(const Mat3& r) const { return Camera(intrinsics_, r * rotation_, r * position_); }

 private:
  Intrinsics intrinsics_;
  Mat3 rotation_ = Mat3::Identity();
  Vec3 position_ = Vec3::Zero();
};

/// Intrinsics from a horizontal field of view, principal point at the center.
Intrinsics intrinsics_from_fov(int width, int height, double fov_x);

}  // namespace glossplat
