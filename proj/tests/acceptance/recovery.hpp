// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/metrics.hpp"
#include "glossplat/model.hpp"
#include "glossplat/pipeline.hpp"
#include "glossplat/synthetic.hpp"

#include <vector>

namespace glossplat::acceptance {

struct RecoveryOptions {
  SphereSceneOptions sphere;
  int train_views = 24;
  int test_views = 8;
  int image_size = 64;
  double fov = 0.75;
  double camera_distance = 3.6;
  double material_noise = 0.3;
  Vec3 background = Vec3::Ones();
};

struct RecoveryScene {
  Model truth;
  Model start;
  std::vector<TargetView> train;
  std::vector<TargetView> test;
  std::vector<Image> test_normals;
};

RecoveryScene make_recovery_scene(const RecoveryOptions& options, std::uint64_t seed);

struct RecoveryMetrics {
  double psnr = 0.0;
  double ssim = 0.0;
  double normal_mae = 0.0;
  double roughness_error = 0.0;
  double env_psnr = 0.0;
  std::vector<ViewMetrics> views;
  EnvMetrics env;
};

RecoveryMetrics evaluate_recovery(const Model& model, const RecoveryScene& scene, const Vec3& background,
                                  bool residual = true);

}  // namespace glossplat::acceptance
