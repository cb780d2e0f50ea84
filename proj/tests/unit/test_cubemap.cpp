// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"
#include "glossplat/cubemap.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace glossplat;
using namespace glossplat::testing;

namespace {

Vec3 random_dir(Rng& rng) { return Vec3(rng.normal(), rng.normal(), rng.normal()).normalized(); }

CubeImage random_cube(int size, std::uint64_t seed) {
  Rng rng(seed);
  CubeImage c(size);
  for (double& v : c.data()) v = rng.uniform(0, 1);
  return c;
}

}  // namespace

TEST(Cubemap, FaceRoundTrip) {
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 d = random_dir(rng);
    const FaceCoord fc = dir_to_face(d);
    EXPECT_LE(std::abs(fc.a), 1.0);
    EXPECT_LE(std::abs(fc.b), 1.0);
    EXPECT_NEAR((face_to_dir(fc.face, fc.a, fc.b).normalized() - d).norm(), 0.0, 1e-12);
  }
}

TEST(Cubemap, MajorAxisFaces) {
  EXPECT_EQ(dir_to_face(Vec3(1, 0, 0)).face, 0);
  EXPECT_EQ(dir_to_face(Vec3(-1, 0, 0)).face, 1);
  EXPECT_EQ(dir_to_face(Vec3(0, 1, 0)).face, 2);
  EXPECT_EQ(dir_to_face(Vec3(0, -1, 0)).face, 3);
  EXPECT_EQ(dir_to_face(Vec3(0, 0, 1)).face, 4);
  EXPECT_EQ(dir_to_face(Vec3(0, 0, -1)).face, 5);
}

TEST(Cubemap, TexelCenterLookupIsExact) {
  const CubeImage c = random_cube(8, 3);
  for (int f = 0; f < 6; ++f)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        const Vec3 v = sample_cube(c, texel_direction(f, i, j, 8));
        const double* t = c.texel(c.texel_index(f, i, j));
        for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(v[ch], t[ch], 1e-12);
      }
}

TEST(Cubemap, ConstantIsPreserved) {
  const CubeImage c(4, 0.37);
  Rng rng(2);
  for (int k = 0; k < 500; ++k) {
    const Vec3 v = sample_cube(c, random_dir(rng));
    for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(v[ch], 0.37, 1e-15);
  }
}

TEST(Cubemap, QuarterRotationIsBitwiseEquivariant) {
  const CubeImage c = random_cube(8, 4);
  Rng rng(5);
  for (int axis = 0; axis < 3; ++axis)
    for (int turns = 1; turns < 4; ++turns) {
      const CubeImage r = rotate_cube_quarter(c, axis, turns);
      for (int k = 0; k < 300; ++k) {
        const Vec3 d = random_dir(rng);
        EXPECT_EQ(sample_cube(r, rotate_quarter(d, axis, turns)), sample_cube(c, d)) << axis << " " << turns;
      }
    }
}

TEST(Cubemap, QuarterRotationMatrixMatchesVectorRotation) {
  Rng rng(6);
  for (int axis = 0; axis < 3; ++axis)
    for (int turns = 0; turns < 4; ++turns) {
      const Mat3 m = quarter_rotation_matrix(axis, turns);
      EXPECT_NEAR(m.determinant(), 1.0, 1e-15);
      const Vec3 d = random_dir(rng);
      EXPECT_EQ(m * d, rotate_quarter(d, axis, turns));
    }
}

TEST(Cubemap, RotationGroupHas24DistinctRotations) {
  const auto& g = cube_rotation_group();
  ASSERT_EQ(g.size(), 24u);
  EXPECT_EQ(g.front(), Mat3::Identity());
  for (std::size_t a = 0; a < g.size(); ++a) {
    EXPECT_EQ(g[a].determinant(), 1.0);
    EXPECT_EQ(g[a] * g[a].transpose(), Mat3::Identity());
    for (std::size_t b = 0; b < a; ++b) EXPECT_NE(g[a], g[b]);
  }
}

TEST(Cubemap, RotateTexelMatchesRotatedCube) {
  const CubeImage c = random_cube(4, 11);
  for (int axis = 0; axis < 3; ++axis)
    for (int turns = 1; turns < 4; ++turns) {
      const CubeImage r = rotate_cube_quarter(c, axis, turns);
      const Mat3 q = quarter_rotation_matrix(axis, turns);
      std::vector<bool> hit(c.texel_count(), false);
      for (std::size_t t = 0; t < c.texel_count(); ++t) {
        const std::size_t u = rotate_texel(4, t, q);
        ASSERT_LT(u, c.texel_count());
        hit[u] = true;
        for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(r.texel(u)[ch], c.texel(t)[ch]);
      }
      EXPECT_EQ(std::count(hit.begin(), hit.end(), true), static_cast<long>(c.texel_count()));
    }
}

TEST(Cubemap, BackwardMatchesFiniteDifferences) {
  CubeImage c = random_cube(4, 7);
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    Vec3 d = random_dir(rng);
    const Vec3 w(rng.normal(), rng.normal(), rng.normal());
    CubeImage gc(4);
    const Vec3 gd = sample_cube_backward(c, d, w, &gc);
    auto f = [&] { return w.dot(sample_cube(c, d)); };
    for (int i = 0; i < 3; ++i) EXPECT_LT(rel_err(gd[i], central_difference(d[i], f)), 1e-6);
    for (std::size_t i = 0; i < c.data().size(); ++i)
      if (gc.data()[i] != 0.0) EXPECT_NEAR(gc.data()[i], central_difference(c.data()[i], f), 1e-8);
  }
}

TEST(Equirect, Spherical) {
  // column/row centers map back to their own directions
  const Vec3 top = equirect_pixel_direction(16, 32, 0, 0);
  EXPECT_GT(top.z(), 0.99);
  const Vec3 d = equirect_pixel_direction(16, 32, 8, 16);
  EXPECT_NEAR(d.norm(), 1.0, 1e-14);
}

TEST(Equirect, RoundTripSmoothEnv) {
  const CubeImage env = smooth_env(32);
  const Image eq = cube_to_equirect(env, 128, 256);
  const CubeImage back = equirect_to_cube(eq, 32);
  double max_err = 0.0;
  for (std::size_t i = 0; i < env.data().size(); ++i)
    max_err = std::max(max_err, std::abs(env.data()[i] - back.data()[i]));
  EXPECT_LT(max_err, 2e-2);
}

TEST(Equirect, ConstantRoundTrip) {
  const CubeImage env(8, 0.25);
  const Image eq = cube_to_equirect(env, 16, 32);
  for (double v : eq.data()) EXPECT_NEAR(v, 0.25, 1e-15);
  const CubeImage cube = equirect_to_cube(eq, 8);
  for (double v : cube.data()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(Equirect, TapsWrapPhiAndClampTheta) {
  const EquirectTaps t = equirect_taps(8, 16, 0.0, kPi);
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    sum += t.weight[k];
    EXPECT_LT(t.pixel[k], 8u * 16u);
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Equirect, NearestExportRoundTripsExactly) {
  const CubeImage env = smooth_env(16, 3);
  const CubeImage back = equirect_to_cube(cube_to_equirect(env, 128, 256, CubeFilter::kNearest), 16);
  for (std::size_t i = 0; i < env.data().size(); ++i) EXPECT_NEAR(back.data()[i], env.data()[i], 1e-14);
}

TEST(Equirect, TexelContainingMatchesTexelDirection) {
  for (int f = 0; f < 6; ++f)
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 5; ++i) EXPECT_EQ(texel_containing(5, texel_direction(f, i, j, 5)), CubeImage(5).texel_index(f, i, j));
}
