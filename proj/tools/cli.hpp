// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/camera.hpp"
#include "glossplat/cubemap.hpp"
#include "glossplat/model.hpp"
#include "glossplat/pipeline.hpp"
#include "glossplat/train.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace glossplat::cli {

/// Runs one command line (without the program name). Returns the exit status;
/// messages go to `out` and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Environment, mipmap and iteration defaults of `train`.
struct TrainDefaults {
  int env_size = 512;
  ResidualShape residual{8, 512, 512, 16, {256, 256}, 0.1};
  int stage1_iters = 30000;
  int stage2_iters = 5000;

  /// env 64, mipmap 4x32x32x16, 2000 + 500 iterations.
  static TrainDefaults desk();
};

/// Renders every camera; the residual is skipped when `options.residual` is false.
std::vector<Frame> render_views(const Model& model, const std::vector<Camera>& cameras, const RenderOptions& options);

/// Copy of `model` with its base env replaced by `env`.
Model relight_model(const Model& model, const CubeImage& env);

/// Reads an equirect .hdr/.pfm environment and converts it to a cube of `size`.
CubeImage read_envmap(const std::filesystem::path& path, int size);

/// Writes the base env as a (height x 2 height) equirect image of nearest
/// texels (height defaults to 8x the face size, enough for read_envmap to
/// recover every texel).
void write_envmap(const std::filesystem::path& path, const CubeImage& env, int height = 0);

}  // namespace glossplat::cli
