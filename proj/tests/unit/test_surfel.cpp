// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"
#include "glossplat/surfel.hpp"

#include <gtest/gtest.h>

using namespace glossplat;
using namespace glossplat::testing;

TEST(GaussianWeight, Examples) {
  EXPECT_DOUBLE_EQ(gaussian_weight(0, 0), 1.0);
  EXPECT_NEAR(gaussian_weight(1, 0), 0.606531, 1e-6);
  EXPECT_NEAR(gaussian_weight(2, 2), 0.018316, 1e-6);
}

TEST(GaussianWeight, MonotoneInRadius) {
  double prev = 1.0;
  for (double r = 0.1; r < 5.0; r += 0.1) {
    const double w = gaussian_weight(r * std::cos(r), r * std::sin(r));
    EXPECT_LT(w, prev);
    prev = w;
  }
}

TEST(RaySplat, CenterHit) {
  const Surfel s = make_surfel(Vec3::Zero(), Vec4(1, 0, 0, 0), 1, 1, 0.5);
  const auto hit = ray_splat_intersect({Vec3(0, 0, 3), Vec3(0, 0, -1)}, s);
  ASSERT_TRUE(hit);
  EXPECT_DOUBLE_EQ(hit->u, 0.0);
  EXPECT_DOUBLE_EQ(hit->v, 0.0);
  EXPECT_DOUBLE_EQ(hit->depth, 3.0);
  EXPECT_DOUBLE_EQ(hit->weight, 1.0);
}

TEST(RaySplat, ParallelMisses) {
  const Surfel s = make_surfel(Vec3::Zero(), Vec4(1, 0, 0, 0), 1, 1, 0.5);
  EXPECT_FALSE(ray_splat_intersect({Vec3(0, 0, 1), Vec3(1, 0, 0)}, s));
}

TEST(RaySplat, BehindOrOnCameraMisses) {
  const Surfel s = make_surfel(Vec3::Zero(), Vec4(1, 0, 0, 0), 1, 1, 0.5);
  EXPECT_FALSE(ray_splat_intersect({Vec3(0, 0, 3), Vec3(0, 0, 1)}, s));
  EXPECT_FALSE(ray_splat_intersect({Vec3(0, 0, 5e-5), Vec3(0, 0, -1)}, s));
}

TEST(RaySplat, ScaledOffsetHit) {
  const Surfel s = make_surfel(Vec3::Zero(), Vec4(1, 0, 0, 0), 2, 1, 0.5);
  const auto hit = ray_splat_intersect({Vec3(1, 0, 5), Vec3(0, 0, -1)}, s);
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->u, 0.5, 1e-15);
  EXPECT_NEAR(hit->v, 0.0, 1e-15);
  EXPECT_NEAR(hit->weight, std::exp(-0.125), 1e-15);
}

TEST(RaySplat, HitLiesOnPlane) {
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    Surfel s = make_surfel(Vec3(rng.normal(), rng.normal(), rng.normal()), random_quat(rng), 0.5, 0.7, 0.5);
    const Ray ray{Vec3(rng.normal(), rng.normal(), rng.normal()) * 4.0,
                  Vec3(rng.normal(), rng.normal(), rng.normal()).normalized()};
    const auto hit = ray_splat_intersect(ray, s);
    if (!hit) continue;
    const Vec3 p = ray.origin + hit->depth * ray.direction;
    EXPECT_NEAR((p - s.center).dot(s.frame().normal), 0.0, 1e-9);
  }
}

TEST(SurfelNormal, Examples) {
  const Surfel a = make_surfel(Vec3::Zero(), Vec4(1, 0, 0, 0), 1, 1, 0.5);
  EXPECT_EQ(surfel_normal(a, Vec3(0, 0, 1)), Vec3(0, 0, 1));
  EXPECT_EQ(surfel_normal(a, Vec3(0, 0, -1)), Vec3(0, 0, -1));
  // t_u = (0,1,0), t_v = (1,0,0): 180 degrees about (1,1,0)/sqrt2
  const Surfel b = make_surfel(Vec3::Zero(), Vec4(0, std::sqrt(0.5), std::sqrt(0.5), 0), 1, 1, 0.5);
  const SurfelFrame f = b.frame();
  EXPECT_NEAR((f.t_u - Vec3(0, 1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((f.t_v - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((surfel_normal(b, Vec3(0, 0, -1)) - Vec3(0, 0, -1)).norm(), 0.0, 1e-15);
}

TEST(SurfelNormal, FacesViewerAndUnit) {
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Surfel s = make_surfel(Vec3::Zero(), random_quat(rng), 1, 1, 0.5);
    const Vec3 v = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const Vec3 n = surfel_normal(s, v);
    EXPECT_GE(n.dot(v), 0.0);
    EXPECT_NEAR(n.norm(), 1.0, 1e-9);
  }
}

TEST(SurfelFrame, Orthonormal) {
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    Surfel s;
    s.rotation = Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal()) * 3.0;  // unnormalized on purpose
    const SurfelFrame f = s.frame();
    EXPECT_NEAR(f.t_u.norm(), 1.0, 1e-12);
    EXPECT_NEAR(f.t_v.norm(), 1.0, 1e-12);
    EXPECT_NEAR(f.t_u.dot(f.t_v), 0.0, 1e-12);
  }
}

TEST(SurfelActivations, Ranges) {
  Surfel s;
  s.raw_roughness = -50;
  EXPECT_NEAR(s.roughness(), kRoughnessMin, 1e-12);
  s.raw_roughness = 50;
  EXPECT_NEAR(s.roughness(), 1.0, 1e-12);
  EXPECT_NEAR(Surfel{.raw_roughness = roughness_to_raw(0.3)}.roughness(), 0.3, 1e-14);
}

// u, v, depth, weight and the unoriented normal against finite differences.
TEST(SurfelGradient, HitMatchesFiniteDifferences) {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Surfel s = make_surfel(Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(2, 3)),
                           (Vec4(1, 0, 0, 0) + 0.4 * random_quat(rng)), rng.uniform(0.3, 0.8), rng.uniform(0.3, 0.8),
                           0.5);
    s.rotation *= 1.3;  // exercise the normalization Jacobian
    const Ray ray{Vec3::Zero(), Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 1).normalized()};
    const auto hit0 = ray_splat_intersect(ray, s);
    ASSERT_TRUE(hit0);
    const double cu = rng.normal(), cv = rng.normal(), cd = rng.normal(), cw = rng.normal();
    const Vec3 cn(rng.normal(), rng.normal(), rng.normal());
    auto f = [&]() {
      const auto h = ray_splat_intersect(ray, s);
      return cu * h->u + cv * h->v + cd * h->depth + cw * h->weight + cn.dot(s.frame().normal);
    };
    HitUpstream up;
    up.u = cu - cw * hit0->u * hit0->weight;
    up.v = cv - cw * hit0->v * hit0->weight;
    up.depth = cd;
    up.normal = cn;
    SurfelGrad g;
    hit_backward(ray, s, *hit0, up, g);
    for (int i = 0; i < 3; ++i) {
      EXPECT_LT(rel_err(g.center[i], central_difference(s.center[i], f)), 1e-5);
      ++checked;
    }
    for (int i = 0; i < 4; ++i) EXPECT_LT(rel_err(g.rotation[i], central_difference(s.rotation[i], f)), 1e-5);
    for (int i = 0; i < 2; ++i) EXPECT_LT(rel_err(g.log_scales[i], central_difference(s.log_scales[i], f)), 1e-5);
  }
  EXPECT_GT(checked, 0);
}
