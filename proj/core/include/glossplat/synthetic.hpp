// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/camera.hpp"
#include "glossplat/cubemap.hpp"
#include "glossplat/model.hpp"
#include "glossplat/pipeline.hpp"

#include <cstdint>
#include <vector>

namespace glossplat {

/// Unit sphere tiled by tangent surfels. The z > 0 hemisphere gets
/// `patch_roughness`, the rest `base_roughness`.
struct SphereSceneOptions {
  int surfels = 200;
  int env_size = 64;
  double patch_roughness = 0.1;
  double base_roughness = 0.8;
  /// Surfel sigma as a fraction of the mean lattice spacing.
  double scale_factor = 0.7;
  double opacity = 0.97;
};

/// Sky/ground gradient with a sun and two colored lobes, values in [0, 1].
CubeImage sky_env(int size);

/// `count` cameras on a Fibonacci sphere of radius `distance` looking at the
/// origin; `twist` rotates the whole rig.
std::vector<Camera> orbit_cameras(int count, int size, double fov_x, double distance, double twist = 0.0);

/// Ground-truth model with hue-varying diffuse color, tint 0.6 and an
/// allocated (zero-output) MLP residual.
Model sphere_model(const SphereSceneOptions& options, std::uint64_t seed);

/// Adds uniform noise in [-amplitude, amplitude] to raw diffuse, roughness and tint.
void perturb_materials(Model& model, double amplitude, std::uint64_t seed);

/// Residual-free renders composited over `background`, with alpha.
std::vector<TargetView> render_targets(const Model& model, const std::vector<Camera>& cameras, const Vec3& background);

}  // namespace glossplat
