// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/cubemap.hpp"
#include "glossplat/image.hpp"

#include <optional>
#include <string>
#include <vector>

namespace glossplat {

inline constexpr double kPsnrCap = 100.0;

/// On images clamped to [0, 1]; 100 dB when MSE < 1e-10.
double psnr(const Image& image, const Image& target);

/// Mean SSIM on images clamped to [0, 1].
double ssim_metric(const Image& image, const Image& target);

/// Mean angular error in degrees over pixels where mask > 0.5. Both normal maps
/// are normalized per pixel first; a zero normal counts as 90 degrees.
double normal_mae(const Image& normals, const Image& target, const Image& mask);

struct EnvMetrics {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Both maps resampled to a common equirect grid and clamped to [0, 1].
EnvMetrics env_metrics(const CubeImage& env, const CubeImage& target, int height = 32, int width = 64);

struct ViewMetrics {
  std::string view;
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> normal_mae;
};

/// One JSON object per view followed by a {"aggregate": ...} line with means.
std::string metrics_jsonl(const std::vector<ViewMetrics>& views, const std::optional<EnvMetrics>& env = {});

}  // namespace glossplat
