// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"
#include "prefilter_oracle.hpp"
#include "glossplat/envlight.hpp"
#include "glossplat/rasterizer.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace glossplat;
using namespace glossplat::testing;

namespace {

PrefilterSettings settings(int levels, int samples = 64, std::uint64_t seed = 0) {
  PrefilterSettings s;
  s.level_count = levels;
  s.samples_per_texel = samples;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(ReflectDir, Examples) {
  EXPECT_EQ(reflect_dir(Vec3(0, 0, 1), Vec3(0, 0, 1)), Vec3(0, 0, 1));
  EXPECT_NEAR((reflect_dir(Vec3(1, 0, 1).normalized(), Vec3(0, 0, 1)) - Vec3(-1, 0, 1).normalized()).norm(), 0, 1e-15);
  EXPECT_EQ(reflect_dir(Vec3(1, 0, 0), Vec3(0, 0, 1)), Vec3(-1, 0, 0));
}

TEST(Prefilter, ConstantIsConserved) {
  const CubeImage base(16, 0.5);
  const EnvCubeMipmap env = prefilter_env(base, settings(5));
  for (const auto& lvl : env.levels)
    for (double v : lvl.data()) EXPECT_NEAR(v, 0.5, 1e-3);
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const Vec3 d = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const Vec3 s = sample_prefiltered(env, d, rng.uniform(0, 1));
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(s[c], 0.5, 1e-3);
  }
}

TEST(Prefilter, LevelZeroIsBase) {
  const CubeImage base = smooth_env(16);
  EXPECT_TRUE(prefilter_env(base, settings(5)).levels[0] == base);
}

TEST(Prefilter, Deterministic) {
  const CubeImage base = smooth_env(16);
  EXPECT_TRUE(prefilter_env(base, settings(4, 64, 9)).levels == prefilter_env(base, settings(4, 64, 9)).levels);
}

TEST(Prefilter, CommutesWithQuarterRotations) {
  const CubeImage base = smooth_env(16, 4);
  const PrefilterOperator pre(16, settings(5, 64, 2));
  const EnvCubeMipmap env = pre.apply(base);
  for (int axis = 0; axis < 3; ++axis)
    for (int turns = 1; turns < 4; ++turns) {
      const EnvCubeMipmap rot = pre.apply(rotate_cube_quarter(base, axis, turns));
      for (int l = 0; l < 5; ++l) {
        const CubeImage expect = rotate_cube_quarter(env.levels[l], axis, turns);
        for (std::size_t i = 0; i < expect.data().size(); ++i)
          EXPECT_NEAR(rot.levels[l].data()[i], expect.data()[i], 1e-13) << axis << " " << turns << " " << l;
      }
    }
}

TEST(Prefilter, RejectsBadInput) {
  const CubeImage base(16, 0.5);
  EXPECT_THROW(prefilter_env(base, settings(1)), std::invalid_argument);
  EXPECT_THROW(prefilter_env(base, settings(6)), std::invalid_argument);
  EXPECT_THROW(prefilter_env(base, settings(3, 16)), std::invalid_argument);
  EXPECT_THROW(prefilter_env(CubeImage(12, 0.5), settings(3)), std::invalid_argument);
  CubeImage bad = base;
  bad.data()[5] = std::nan("");
  EXPECT_THROW(prefilter_env(bad, settings(3)), std::invalid_argument);
}

TEST(Prefilter, MonotoneBlur) {
  Rng rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    CubeImage base(16);
    for (double& v : base.data()) v = rng.uniform(0, 1);
    const EnvCubeMipmap env = prefilter_env(base, settings(5, 64, trial));
    double prev = 1e30;
    for (int l = 0; l < env.level_count(); ++l) {
      Rng dirs(77);
      double s = 0.0, s2 = 0.0;
      const int n = 4000;
      for (int k = 0; k < n; ++k) {
        const Vec3 d = Vec3(dirs.normal(), dirs.normal(), dirs.normal()).normalized();
        const double v = sample_prefiltered(env, d, static_cast<double>(l) / (env.level_count() - 1))[0];
        s += v;
        s2 += v * v;
      }
      const double var = s2 / n - (s / n) * (s / n);
      EXPECT_LE(var, prev);
      prev = var;
    }
  }
}

TEST(Prefilter, DeltaLightMatchesMonteCarloOracle) {
  const PrefilterOperator op(8, settings(4, 65536, 2));
  for (int level = 1; level <= 2; ++level) {
    const DeltaLightCheck c = delta_light_check(op, level, 4, 3, 4);
    EXPECT_NEAR(c.prefiltered / c.oracle, 1.0, 0.02) << "level " << level;
  }
}

TEST(Prefilter, BackwardIsTranspose) {
  const int R = 8;
  const PrefilterOperator op(R, settings(4, 64, 1));
  Rng rng(6);
  CubeImage x(R);
  for (double& v : x.data()) v = rng.uniform(0, 1);
  const EnvCubeMipmap y = op.apply(x);
  std::vector<CubeImage> gy;
  double lhs = 0.0;
  for (int l = 0; l < 4; ++l) {
    gy.emplace_back(R >> l);
    for (std::size_t i = 0; i < gy.back().data().size(); ++i) {
      gy.back().data()[i] = rng.normal();
      lhs += gy.back().data()[i] * y.levels[l].data()[i];
    }
  }
  CubeImage gx(R);
  op.backward(gy, gx);
  double rhs = 0.0;
  for (std::size_t i = 0; i < x.data().size(); ++i) rhs += gx.data()[i] * x.data()[i];
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

TEST(SamplePrefiltered, LevelInterpolation) {
  EnvCubeMipmap env;
  for (int l = 0; l < 4; ++l) env.levels.emplace_back(8 >> l, static_cast<double>(l * l));
  const Vec3 d(0.2, 0.3, 0.9);
  EXPECT_NEAR(sample_prefiltered(env, d, 0.0)[0], 0.0, 1e-15);
  EXPECT_NEAR(sample_prefiltered(env, d, 0.5)[0], 2.5, 1e-14);  // halfway between levels 1 and 2
  EXPECT_NEAR(sample_prefiltered(env, d, 1.0)[0], 9.0, 1e-14);
  EXPECT_NEAR(sample_prefiltered(env, d, 0.5, true)[0], 0.0, 1e-15);
}

TEST(SamplePrefiltered, BackwardMatchesFiniteDifferences) {
  const EnvCubeMipmap env = prefilter_env(smooth_env(8), settings(4));
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    Vec3 d = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    double rho = rng.uniform(0.05, 0.95);
    const Vec3 w(rng.normal(), rng.normal(), rng.normal());
    auto f = [&] { return w.dot(sample_prefiltered(env, d, rho)); };
    const SampleGrad g = sample_prefiltered_backward(env, d, rho, w, nullptr);
    EXPECT_LT(rel_err(g.roughness, central_difference(rho, f)), 1e-6);
    for (int i = 0; i < 3; ++i) EXPECT_LT(rel_err(g.dir[i], central_difference(d[i], f)), 1e-6);
  }
}

namespace {

GBuffer one_surfel_gbuffer(const Surfel& s, const Camera& cam) { return rasterize_gbuffer(std::vector{s}, cam); }

}  // namespace

TEST(ShadeDeferred, ZeroTintGivesDiffuseOnly) {
  auto surfels = random_surfels(10, 3);
  for (auto& s : surfels) s.raw_tint = Vec3::Constant(-1e3);  // sigmoid underflows to 0
  const Camera cam = front_camera(24, 24);
  const GBuffer gb = rasterize_gbuffer(surfels, cam);
  const ShadeOutput out = shade_deferred(gb, cam, prefilter_env(smooth_env(8), settings(4)));
  for (double v : out.specular.data()) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(out.diffuse == gb.diffuse);
}

TEST(ShadeDeferred, ConstantEnvFullTint) {
  Surfel s = make_surfel(Vec3(0, 0, 3), Vec4(1, 0.1, 0.05, 0), 200, 200, 0.5);
  s.raw_opacity = 40;
  s.raw_tint = Vec3::Constant(1e3);
  const Camera cam = front_camera(8, 8);
  const ShadeOutput out = shade_deferred(one_surfel_gbuffer(s, cam), cam, prefilter_env(CubeImage(8, 0.7), settings(4)));
  for (double v : out.specular.data()) EXPECT_NEAR(v, 0.7, 1e-3);
}

TEST(ShadeDeferred, OpaqueSingleSurfelMatchesForwardShading) {
  // each surfel is centered on one pixel ray, so that pixel has weight exactly 1
  const Camera cam = front_camera(12, 12);
  const EnvCubeMipmap env = prefilter_env(smooth_env(16), settings(5));
  Rng rng(8);
  for (int k = 0; k < 30; ++k) {
    const int x = static_cast<int>(rng.below(12)), y = static_cast<int>(rng.below(12));
    const Ray r = cam.pixel_ray(x, y);
    Surfel s = make_surfel(r.direction * rng.uniform(2, 4), (Vec4(1, 0, 0, 0) + 0.4 * random_quat(rng)), 0.5, 0.5, 0.5);
    s.raw_opacity = 40;
    s.raw_tint = Vec3(rng.normal(), rng.normal(), rng.normal());
    s.raw_roughness = rng.normal();
    const GBuffer gb = one_surfel_gbuffer(s, cam);
    ASSERT_EQ(gb.alpha.at(x, y, 0), 1.0);
    const ShadeOutput out = shade_deferred(gb, cam, env);
    const Vec3 n = surfel_normal(s, -r.direction);
    const Vec3 ref = s.tint().cwiseProduct(sample_prefiltered(env, reflect_dir(-r.direction, n), s.roughness()));
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.specular.at(x, y, c), ref[c], 1e-12);
  }
}

TEST(ShadeDeferred, SpecularNonNegative) {
  const auto surfels = random_surfels(20, 5);
  const Camera cam = front_camera(24, 24);
  const ShadeOutput out =
      shade_deferred(rasterize_gbuffer(surfels, cam), cam, prefilter_env(smooth_env(8), settings(4)));
  for (double v : out.specular.data()) EXPECT_GE(v, 0.0);
}
