// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/camera.hpp"
#include "glossplat/image.hpp"
#include "glossplat/surfel.hpp"

#include <array>
#include <span>
#include <vector>

namespace glossplat {

inline constexpr double kMinBlendAlpha = 1.0 / 255.0;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr int kTileSize = 16;

/// Per-surfel property channels blended into the G-buffer.
namespace prop {
inline constexpr int kDiffuse = 0;
inline constexpr int kRoughness = 3;
inline constexpr int kTint = 4;
inline constexpr int kFeature = 7;
inline constexpr int kExtra = 11;  // optional per-view color (SH residual)
inline constexpr int kCount = 14;
}  // namespace prop

using PropVector = std::array<double, prop::kCount>;

/// Material overrides applied to activated values before blending.
struct MaterialEdit {
  double roughness_scale = 1.0;
  double roughness_offset = 0.0;
  Vec3 diffuse_tint = Vec3::Ones();

  bool is_identity() const {
    return roughness_scale == 1.0 && roughness_offset == 0.0 && diffuse_tint == Vec3::Ones();
  }
};

/// Screen-space property maps. Material channels are premultiplied by alpha.
struct GBuffer {
  Image diffuse;    // 3
  Image roughness;  // 1
  Image tint;       // 3
  Image feature;    // 4
  Image normal;     // 3, blended t_u x t_v oriented per ray, not renormalized
  Image alpha;      // 1
  Image depth;      // 1, alpha-normalized mean hit depth (0 where alpha = 0)
  Image extra;      // 3, only when extra colors were supplied

  GBuffer() = default;
  GBuffer(int width, int height, bool with_extra);
  int width() const { return alpha.width(); }
  int height() const { return alpha.height(); }
  bool has_extra() const { return !extra.empty(); }
};

/// One contributing ray-splat intersection.
struct BlendHit {
  int surfel = 0;
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  double gaussian = 0.0;
  double opacity = 0.0;
  double weight = 0.0;         // w_i
  double transmittance = 1.0;  // before this hit
  double sign = 1.0;           // normal flip towards the viewer
  Vec3 normal = Vec3::Zero();  // oriented
};

/// Contributing hits for every pixel ray, front to back.
struct RayBlendRecords {
  int width = 0;
  int height = 0;
  std::vector<std::size_t> offsets;  // pixel_count + 1
  std::vector<BlendHit> hits;

  std::span<const BlendHit> pixel(std::size_t p) const {
    return {hits.data() + offsets[p], offsets[p + 1] - offsets[p]};
  }
  std::size_t pixel_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

struct RasterOptions {
  std::span<const Vec3> extra_color;  // one per surfel or empty
  MaterialEdit edit;
  bool early_termination = true;
  bool tiled = true;
};

struct RasterOutput {
  GBuffer gbuffer;
  RayBlendRecords records;
  std::vector<int> order;
};

/// Indices sorted by center view depth, stable.
std::vector<int> sort_surfels(std::span<const Surfel> surfels, const Camera& camera);

/// Activated (and optionally edited) property vector of one surfel.
PropVector surfel_properties(const Surfel& s, const MaterialEdit& edit, const Vec3* extra);

RasterOutput rasterize(std::span<const Surfel> surfels, const Camera& camera, const RasterOptions& options = {});

inline GBuffer rasterize_gbuffer(std::span<const Surfel> surfels, const Camera& camera) {
  return rasterize(surfels, camera).gbuffer;
}

/// Gradients w.r.t. G-buffer channels; empty images are treated as zero.
struct GBufferGrad {
  Image diffuse, roughness, tint, feature, normal, alpha, depth, extra;
  explicit GBufferGrad(const GBuffer& like);
};

/// Optional direct gradients on the per-hit quantities of RayBlendRecords
/// (used by the normal-consistency and depth-distortion losses).
struct RecordGrad {
  std::vector<double> weight;
  std::vector<double> depth;
  std::vector<Vec3> normal;  // w.r.t. the oriented normal
  explicit RecordGrad(const RayBlendRecords& r)
      : weight(r.hits.size(), 0.0), depth(r.hits.size(), 0.0), normal(r.hits.size(), Vec3::Zero()) {}
};

struct RasterGrad {
  std::vector<SurfelGrad> surfels;  // geometry, opacity and material raw-parameter gradients
  std::vector<Vec3> extra_color;    // gradient w.r.t. the supplied extra colors
};

/// Reverse pass of `rasterize`. Material edits are treated as constants.
RasterGrad rasterize_backward(std::span<const Surfel> surfels, const Camera& camera, const RasterOutput& forward,
                              const GBufferGrad& grad, std::span<const Vec3> extra_color = {},
                              const RecordGrad* record_grad = nullptr);

/// Back-projected finite-difference normals (unit, facing the camera). Zero at
/// the border and wherever the pixel or one of its 4 neighbors has alpha < 0.5.
Image depth_to_normals(const Image& depth, const Image& alpha, const Camera& camera);

/// Accumulates the gradient of depth_to_normals into d_depth.
void depth_to_normals_backward(const Image& depth, const Image& alpha, const Camera& camera, const Image& d_normals,
                               Image& d_depth);

}  // namespace glossplat
