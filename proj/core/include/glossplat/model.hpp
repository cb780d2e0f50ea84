// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/cubemap.hpp"
#include "glossplat/envlight.hpp"
#include "glossplat/residual.hpp"
#include "glossplat/sh.hpp"
#include "glossplat/surfel.hpp"

#include <span>
#include <string>
#include <vector>

namespace glossplat {

enum class ResidualKind { kMlp, kSh };

struct ModelOptions {
  PrefilterSettings prefilter;
  bool single_level_env = false;
  ResidualKind residual_kind = ResidualKind::kMlp;

  bool operator==(const ModelOptions&) const = default;
};

struct ResidualShape {
  int levels = 4;
  int height = 32;
  int width = 32;
  int features = 16;
  std::vector<int> hidden{256, 256};
  double init_scale = 0.1;  // uniform mipmap init range
};

/// Every learnable quantity plus the settings needed to render it.
struct Model {
  ModelOptions options;
  std::vector<Surfel> surfels;
  std::vector<ShCoefficients> sh;  // one per surfel when residual_kind == kSh
  CubeImage env;                   // learnable base level
  SphericalFeatureMipmap mip;
  ResidualMlp mlp;

  std::size_t size() const { return surfels.size(); }
  void validate() const;
  bool operator==(const Model&) const = default;
};

/// Allocates the residual branch (mipmap, mlp, SH coefficients) for `model`.
void init_residual(Model& model, const ResidualShape& shape, std::uint64_t seed);

struct SurfelInit {
  double opacity = 0.5;
  double roughness = 0.5;
  double diffuse = 0.5;
  double tint = 0.3;
};

/// Surfels at `points` with random tangent frames and isotropic scale from the
/// mean distance to the 3 nearest neighbors.
std::vector<Surfel> init_surfels(std::span<const Vec3> points, std::uint64_t seed, const SurfelInit& init = {});

/// Fibonacci-lattice points on a sphere.
std::vector<Vec3> fibonacci_sphere(int count, const Vec3& center, double radius);

struct ModelGrad {
  std::vector<SurfelGrad> surfels;
  std::vector<ShCoefficients> sh;
  CubeImage env;
  ResidualGrad residual;

  explicit ModelGrad(const Model& like);
  void zero();
};

/// A named flat range of doubles inside a Model or ModelGrad.
struct ParamView {
  std::string group;
  std::span<double> values;
};

/// Groups: position, rotation, scale, opacity, diffuse, roughness, tint,
/// feature, sh, env, mipmap, mlp. parameter_views and gradient_views list the
/// same ranges in the same order.
std::vector<ParamView> parameter_views(Model& model);
std::vector<ParamView> gradient_views(ModelGrad& grad);

/// Post-step projections: unit quaternions, non-negative env.
void project_parameters(Model& model);

}  // namespace glossplat
