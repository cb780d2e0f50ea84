// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/envlight.hpp"
#include "glossplat/pipeline.hpp"
#include "glossplat/rasterizer.hpp"
#include "glossplat/residual.hpp"
#include "glossplat/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace glossplat;

namespace {

struct Scene {
  Model model;
  Camera camera;
  EnvCubeMipmap env;

  Scene(int surfels, int size) {
    SphereSceneOptions o;
    o.surfels = surfels;
    model = sphere_model(o, 1);
    camera = orbit_cameras(1, size, 0.75, 3.6).front();
    env = prefilter_env(model.env, model.options.prefilter);
  }
};

void BM_Rasterize(benchmark::State& state) {
  const Scene sc(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(sc.model.surfels, sc.camera));
  state.SetItemsProcessed(state.iterations() * state.range(1) * state.range(1));
}
BENCHMARK(BM_Rasterize)->Args({200, 64})->Args({2000, 128})->Unit(benchmark::kMillisecond);

void BM_RasterizeBackward(benchmark::State& state) {
  const Scene sc(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const RasterOutput fwd = rasterize(sc.model.surfels, sc.camera);
  GBufferGrad gg(fwd.gbuffer);
  gg.diffuse.fill(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(rasterize_backward(sc.model.surfels, sc.camera, fwd, gg));
}
BENCHMARK(BM_RasterizeBackward)->Args({200, 64})->Args({2000, 128})->Unit(benchmark::kMillisecond);

void BM_PrefilterBuild(benchmark::State& state) {
  PrefilterSettings s;
  const int size = static_cast<int>(state.range(0));
  s.level_count = std::min(s.level_count, max_prefilter_levels(size));
  for (auto _ : state) benchmark::DoNotOptimize(PrefilterOperator(size, s));
}
BENCHMARK(BM_PrefilterBuild)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_PrefilterApply(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  PrefilterSettings s;
  s.level_count = std::min(s.level_count, max_prefilter_levels(size));
  const PrefilterOperator op(size, s);
  const CubeImage base = sky_env(size);
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(base));
}
BENCHMARK(BM_PrefilterApply)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ShadeDeferred(benchmark::State& state) {
  const Scene sc(2000, static_cast<int>(state.range(0)));
  const GBuffer gb = rasterize_gbuffer(sc.model.surfels, sc.camera);
  for (auto _ : state) benchmark::DoNotOptimize(shade_deferred(gb, sc.camera, sc.env));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_ShadeDeferred)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Residual(benchmark::State& state) {
  const Scene sc(2000, static_cast<int>(state.range(0)));
  const GBuffer gb = rasterize_gbuffer(sc.model.surfels, sc.camera);
  for (auto _ : state) benchmark::DoNotOptimize(render_residual_image(gb, sc.camera, sc.model.mip, sc.model.mlp));
}
BENCHMARK(BM_Residual)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TrainingStep(benchmark::State& state) {
  const Scene sc(200, 64);
  const auto views = render_targets(sc.model, {sc.camera}, Vec3::Ones());
  const PrefilterOperator pre(sc.model.env.size(), sc.model.options.prefilter);
  ObjectiveOptions opt;
  opt.background = Vec3::Ones();
  opt.residual = state.range(0) != 0;
  for (auto _ : state) {
    ModelGrad g(sc.model);
    benchmark::DoNotOptimize(evaluate_objective(sc.model, sc.env, views.front(), opt, &g, &pre));
  }
}
BENCHMARK(BM_TrainingStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
