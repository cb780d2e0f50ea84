// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/camera.hpp"
#include "glossplat/envlight.hpp"
#include "glossplat/losses.hpp"
#include "glossplat/model.hpp"
#include "glossplat/rasterizer.hpp"
#include "glossplat/residual.hpp"

#include <optional>
#include <vector>

namespace glossplat {

struct RenderOptions {
  bool residual = true;
  MaterialEdit edit;
};

/// One rendered view with everything the backward pass needs.
struct Frame {
  RasterOutput raster;
  ShadeOutput shade;
  std::optional<ResidualOutput> residual;  // MLP residual
  std::vector<Vec3> sh_colors;             // SH residual, per surfel
  Image residual_image;                    // I_r (zero when disabled)
  Image image;                             // I = I_d + I_s (+ I_r), not composited
};

/// Residual branch is evaluated only when requested and present in the model.
Frame render_frame(const Model& model, const EnvCubeMipmap& env, const Camera& camera, const RenderOptions& options = {});

/// Ground truth for one training view. `target` is already composited over the
/// scene background; `alpha` may be empty (no alpha supervision).
struct TargetView {
  Camera camera;
  Image target;
  Image alpha;
};

struct ObjectiveOptions {
  LossWeights weights;
  Vec3 background = Vec3::Zero();
  bool geometry_losses = true;  // L_d, L_n, L_alpha
  bool residual = false;
  std::optional<Aabb> bounding_box;
  double bounding_box_weight = 1.0;
  /// L_d reads hit depths through the NDC map with these planes; near <= 0 uses ray depth.
  double distortion_near = 0.2;
  double distortion_far = 100.0;
};

/// far (t - near) / ((far - near) t)
inline double ndc_depth(double t, double near, double far) { return far * (t - near) / ((far - near) * t); }
inline double ndc_depth_grad(double t, double near, double far) { return far * near / ((far - near) * t * t); }

struct LossReport {
  LossParts parts;
  double bounding_box = 0.0;
  double total = 0.0;
  double psnr = 0.0;
};

/// Forward + optional full reverse pass of the training objective for one view.
/// Env level gradients are mapped to the base through `prefilter` (required
/// when `grad` is given).
LossReport evaluate_objective(const Model& model, const EnvCubeMipmap& env, const TargetView& view,
                              const ObjectiveOptions& options, ModelGrad* grad = nullptr,
                              const PrefilterOperator* prefilter = nullptr);

/// Per-surfel SH residual colors as seen from `camera`.
std::vector<Vec3> sh_colors(const Model& model, const Camera& camera);

}  // namespace glossplat
