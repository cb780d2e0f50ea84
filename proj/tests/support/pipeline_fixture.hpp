// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "fixtures.hpp"
#include "objective_terms.hpp"
#include "glossplat/gradcheck.hpp"
#include "glossplat/model.hpp"
#include "glossplat/pipeline.hpp"

namespace glossplat::testing {

/// Five surfels, 16x16 view, 8x8 env faces, 2x8x8x4 mipmap, MLP widths 8.
struct PipelineFixture {
  Model model;
  TargetView view;
  PrefilterOperator prefilter;
  ObjectiveOptions options;

  explicit PipelineFixture(ResidualKind kind = ResidualKind::kMlp, std::uint64_t seed = 41) {
    model.options.prefilter.level_count = 4;
    model.options.prefilter.samples_per_texel = 32;
    model.options.residual_kind = kind;
    model.surfels = random_surfels(5, seed);
    model.env = smooth_env(8, seed);
    ResidualShape shape;
    shape.levels = 2;
    shape.height = 8;
    shape.width = 8;
    shape.features = 4;
    shape.hidden = {8, 8};
    shape.init_scale = 1.0;
    init_residual(model, shape, seed);
    Rng rng(hash_combine(seed, 9));
    for (auto& l : model.mlp.layers()) {
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = rng.uniform(-0.8, 0.8);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = rng.uniform(-0.2, 0.2);
    }
    for (auto& c : model.sh)
      for (double& v : c) v = rng.uniform(-0.3, 0.3);
    view.camera = front_camera(16, 16);
    view.target = Image(16, 16, 3);
    view.alpha = Image(16, 16, 1);
    for (double& v : view.target.data()) v = rng.uniform(0.0, 1.0);
    for (double& v : view.alpha.data()) v = rng.uniform(0.0, 1.0);
    prefilter = PrefilterOperator(8, model.options.prefilter);
    options.residual = true;
    options.background = Vec3(0.2, 0.3, 0.4);
    options.bounding_box = Aabb{Vec3(-0.3, -0.3, 2.0), Vec3(0.3, 0.3, 5.0)};
  }

  double loss() const { return evaluate_objective(model, prefilter.apply(model.env), view, options).total; }

  std::vector<double> terms() const { return objective_terms(model, prefilter.apply(model.env), view, options); }

  ModelGrad gradient() const {
    ModelGrad g(model);
    evaluate_objective(model, prefilter.apply(model.env), view, options, &g, &prefilter);
    return g;
  }

  GradcheckReport check() {
    ModelGrad g = gradient();
    return gradcheck_terms(parameter_views(model), gradient_views(g), [&] { return terms(); });
  }
};

}  // namespace glossplat::testing
