// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/math.hpp"

#include <optional>

namespace glossplat {

inline constexpr double kRoughnessMin = 0.02;
inline constexpr double kNearEpsilon = 1e-4;
inline constexpr double kParallelEpsilon = 1e-8;
inline constexpr int kFeatureDim = 4;

/// Orthonormal disk frame; normal = t_u x t_v.
struct SurfelFrame {
  Vec3 t_u;
  Vec3 t_v;
  Vec3 normal;
};

/// One oriented 2D Gaussian disk. Every field is an unconstrained optimizer
/// parameter; the accessors apply the activations.
struct Surfel {
  Vec3 center = Vec3::Zero();
  Vec4 rotation = Vec4(1, 0, 0, 0);  // (w, x, y, z), normalized on use
  Vec2 log_scales = Vec2::Zero();
  double raw_opacity = 0.0;
  Vec3 raw_diffuse = Vec3::Zero();
  double raw_roughness = 0.0;
  Vec3 raw_tint = Vec3::Zero();
  Vec4 feature = Vec4::Zero();

  double opacity() const { return sigmoid(raw_opacity); }
  Vec3 diffuse() const { return sigmoid(raw_diffuse); }
  double roughness() const { return kRoughnessMin + (1.0 - kRoughnessMin) * sigmoid(raw_roughness); }
  Vec3 tint() const { return sigmoid(raw_tint); }
  Vec2 scales() const { return {std::exp(log_scales[0]), std::exp(log_scales[1])}; }
  SurfelFrame frame() const;

  bool operator==(const Surfel&) const = default;
};

/// Raw-parameter inverse of Surfel::roughness().
double roughness_to_raw(double roughness);

/// Gradient with the same layout as Surfel (w.r.t. its raw fields).
struct SurfelGrad {
  Vec3 center = Vec3::Zero();
  Vec4 rotation = Vec4::Zero();
  Vec2 log_scales = Vec2::Zero();
  double raw_opacity = 0.0;
  Vec3 raw_diffuse = Vec3::Zero();
  double raw_roughness = 0.0;
  Vec3 raw_tint = Vec3::Zero();
  Vec4 feature = Vec4::Zero();

  SurfelGrad& operator+=(const SurfelGrad& o);
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
};

struct SplatHit {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // ray parameter
  double weight = 0.0;
};

/// exp(-(u^2 + v^2) / 2)
inline double gaussian_weight(double u, double v) { return std::exp(-0.5 * (u * u + v * v)); }

std::optional<SplatHit> ray_splat_intersect(const Ray& ray, const Surfel& surfel);

/// t_u x t_v, flipped to face view_dir (which points from the surface to the camera).
Vec3 surfel_normal(const Surfel& surfel, const Vec3& view_dir);

/// Upstream gradients for one ray-splat hit. `normal` is w.r.t. the unoriented
/// t_u x t_v (callers fold in the view flip sign).
struct HitUpstream {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  Vec3 normal = Vec3::Zero();
};

/// Adds the geometric gradient of a hit into center/rotation/log_scales of `grad`.
void hit_backward(const Ray& ray, const Surfel& surfel, const SplatHit& hit, const HitUpstream& up,
                  SurfelGrad& grad);

/// Backprop through normalize(q) -> (t_u, t_v), accumulating into d_rotation.
void frame_backward(const Vec4& rotation, const Vec3& d_tu, const Vec3& d_tv, Vec4& d_rotation);

}  // namespace glossplat
