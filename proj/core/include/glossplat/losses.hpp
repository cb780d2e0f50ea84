// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/image.hpp"
#include "glossplat/rasterizer.hpp"
#include "glossplat/surfel.hpp"

#include <span>
#include <vector>

namespace glossplat {

struct LossWeights {
  double ssim_mix = 0.2;  // lambda in (1 - lambda) L1 + lambda D-SSIM
  double normal = 0.05;
  double distortion = 100.0;
  double alpha = 1.0;

  void validate() const;
};

/// Mean SSIM over all pixels and channels (11x11 Gaussian window, sigma 1.5,
/// zero padding, C1 = 0.01^2, C2 = 0.03^2). Inputs are used as given.
double ssim(const Image& a, const Image& b, Image* grad_a = nullptr);

struct PhotometricLoss {
  double value = 0.0;
  double l1 = 0.0;
  double dssim = 0.0;
};

/// (1 - mix) * L1 + mix * (1 - SSIM) / 2 on both images clamped to [0, 1].
/// `grad` receives d/d(image) (zero where the image was clamped).
PhotometricLoss photometric_loss(const Image& image, const Image& target, double mix = 0.2, Image* grad = nullptr);

/// Sum over hits of w (1 - n . N), averaged over pixels with nonzero N.
double normal_consistency_loss(const RayBlendRecords& records, const Image& depth_normals,
                               RecordGrad* record_grad = nullptr, Image* d_depth_normals = nullptr,
                               double scale = 1.0);

/// Sum over hit pairs (both orders) of w_i w_j |z_i - z_j|, averaged over rays with hits.
double depth_distortion_loss(const RayBlendRecords& records, RecordGrad* record_grad = nullptr, double scale = 1.0);

/// Mean |A - A_gt|.
double alpha_loss(const Image& alpha, const Image& target, Image* grad = nullptr, double scale = 1.0);

struct LossParts {
  double color = 0.0;
  double distortion = 0.0;
  double normal = 0.0;
  double alpha = 0.0;
};

/// L_c + lambda_d L_d + lambda_n L_n + lambda_a L_a; throws on non-finite parts.
double total_loss(const LossParts& parts, const LossWeights& weights = {});

struct Aabb {
  Vec3 lo = Vec3::Constant(-1.0);
  Vec3 hi = Vec3::Constant(1.0);
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

inline constexpr double kOutsideRoughnessTarget = 0.9;

/// Mean over surfels centered outside `box` of max(0, target - roughness).
double bounding_volume_roughness_penalty(std::span<const Surfel> surfels, const Aabb& box,
                                         std::vector<SurfelGrad>* grad = nullptr, double scale = 1.0,
                                         double target = kOutsideRoughnessTarget);

/// Composites an RGB render over a constant background using its alpha.
Image composite(const Image& rgb, const Image& alpha, const Vec3& background);

}  // namespace glossplat
