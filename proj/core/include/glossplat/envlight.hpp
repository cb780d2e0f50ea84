// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/camera.hpp"
#include "glossplat/cubemap.hpp"
#include "glossplat/rasterizer.hpp"

#include <cstdint>
#include <vector>

namespace glossplat {

/// Roughness-prefiltered cube mipmap. levels[0] is the learnable base; level l
/// has face size base/2^l and corresponds to roughness l / (L - 1).
struct EnvCubeMipmap {
  std::vector<CubeImage> levels;

  int base_size() const { return levels.empty() ? 0 : levels.front().size(); }
  int level_count() const { return static_cast<int>(levels.size()); }
  CubeImage& base() { return levels.front(); }
  const CubeImage& base() const { return levels.front(); }
};

struct PrefilterSettings {
  int level_count = 7;
  int samples_per_texel = 64;
  std::uint64_t seed = 0;
  // Added to the filtered-importance-sampling source level.
  double lod_bias = 1.0;

  bool operator==(const PrefilterSettings&) const = default;
};

/// Levels available for a power-of-two base face size (down to 1x1 faces).
int max_prefilter_levels(int base_size);

/// Prefiltering as a fixed sparse linear map from the base faces to every
/// level. Samples are GGX importance samples (alpha = roughness^2) around each
/// texel direction with v = n, weighted by n.l and normalized; each sample
/// reads a box-filtered pyramid of the base at a level chosen from its solid
/// angle. The weights depend only on the settings, so the same operator serves
/// the forward pass and its transpose.
class PrefilterOperator {
 public:
  PrefilterOperator() = default;
  PrefilterOperator(int base_size, const PrefilterSettings& settings);

  int base_size() const { return base_size_; }
  const PrefilterSettings& settings() const { return settings_; }

  /// levels[0] = base, levels[l >= 1] = prefiltered.
  EnvCubeMipmap apply(const CubeImage& base) const;

  /// Recomputes levels 1.. of `env` from env.levels[0].
  void refresh(EnvCubeMipmap& env) const;

  /// Adds the transpose of the level map applied to `level_grads` (levels >= 1)
  /// plus level_grads[0] into `base_grad`.
  void backward(const std::vector<CubeImage>& level_grads, CubeImage& base_grad) const;

  /// Sparse row (source pyramid level, texel, weight) for an output texel; for tests.
  struct Tap {
    std::uint8_t pyramid_level;
    std::uint32_t texel;
    double weight;
  };
  std::vector<Tap> row(int level, std::size_t texel) const;

 private:
  int base_size_ = 0;
  PrefilterSettings settings_;
  int pyramid_levels_ = 0;
  // per output level (index 0 unused): CSR rows over texels
  std::vector<std::vector<std::size_t>> offsets_;
  std::vector<std::vector<Tap>> taps_;
};

/// Box-downsampled pyramid of a cube map; pyramid[0] = base.
std::vector<CubeImage> box_pyramid(const CubeImage& base);

/// Builds the full mipmap. Rejects fewer than 2 levels, more levels than the
/// base size allows, non-power-of-two sizes, fewer than 32 samples and
/// non-finite base values.
EnvCubeMipmap prefilter_env(const CubeImage& base, const PrefilterSettings& settings);

/// Mirror reflection of the outgoing direction about the normal.
inline Vec3 reflect_dir(const Vec3& view_dir, const Vec3& normal) {
  return 2.0 * view_dir.dot(normal) * normal - view_dir;
}

/// Trilinear lookup: bilinear per level, linear between floor/ceil of
/// roughness * (L - 1). With single_level only level 0 is used.
Vec3 sample_prefiltered(const EnvCubeMipmap& env, const Vec3& dir, double roughness, bool single_level = false);

struct SampleGrad {
  Vec3 dir = Vec3::Zero();
  double roughness = 0.0;
};

/// Gradient of sample_prefiltered; texel gradients are added to level_grads.
SampleGrad sample_prefiltered_backward(const EnvCubeMipmap& env, const Vec3& dir, double roughness,
                                       const Vec3& d_out, std::vector<CubeImage>* level_grads,
                                       bool single_level = false);

/// Per-level gradient buffers shaped like `env`.
std::vector<CubeImage> zero_level_grads(const EnvCubeMipmap& env);

struct ShadeOutput {
  Image diffuse;   // I_d
  Image specular;  // I_s = S * L_s
  Image light;     // L_s, zero where alpha = 0
};

/// Pixel-level split-sum shading of a G-buffer.
ShadeOutput shade_deferred(const GBuffer& gbuffer, const Camera& camera, const EnvCubeMipmap& env,
                           bool single_level = false);

/// Reverse pass: consumes d_specular and adds into gbuffer_grad (tint, normal,
/// roughness) and level_grads. I_d is the diffuse channel, so its gradient is
/// passed through by the caller.
void shade_deferred_backward(const GBuffer& gbuffer, const Camera& camera, const EnvCubeMipmap& env,
                             const ShadeOutput& forward, const Image& d_specular, GBufferGrad& gbuffer_grad,
                             std::vector<CubeImage>* level_grads, bool single_level = false);

}  // namespace glossplat
