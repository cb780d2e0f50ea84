// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"
#include "glossplat/sh.hpp"

#include <gtest/gtest.h>

using namespace glossplat;
using namespace glossplat::testing;

TEST(SphericalHarmonics, ZeroCoefficients) {
  EXPECT_EQ(sh_evaluate(ShCoefficients{}, Vec3(0.3, 0.4, 0.5).normalized()), Vec3::Zero());
}

TEST(SphericalHarmonics, DcOnly) {
  ShCoefficients c{};
  c[0] = 2.0;
  c[1] = -1.0;
  c[2] = 0.5;
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const Vec3 v = sh_evaluate(c, Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
    EXPECT_NEAR(v[0], 2.0 * 0.28209479, 1e-8);
    EXPECT_NEAR(v[1], -0.28209479, 1e-8);
    EXPECT_NEAR(v[2], 0.5 * 0.28209479, 1e-8);
  }
}

TEST(SphericalHarmonics, DegreeOneZ) {
  ShCoefficients c{};
  c[2 * 3 + 0] = 1.5;
  EXPECT_NEAR(sh_evaluate(c, Vec3(0, 0, 1))[0], 1.5 * 0.48860251, 1e-8);
}

TEST(SphericalHarmonics, Orthonormal) {
  // Monte Carlo Gram matrix of the basis on the sphere
  Rng rng(2);
  const int n = 400000;
  Eigen::Matrix<double, 16, 16> gram = Eigen::Matrix<double, 16, 16>::Zero();
  for (int k = 0; k < n; ++k) {
    const auto b = sh_basis(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
    const Eigen::Map<const Eigen::Matrix<double, 16, 1>> v(b.data());
    gram += v * v.transpose();
  }
  gram *= 4.0 * kPi / n;
  EXPECT_LT((gram - Eigen::Matrix<double, 16, 16>::Identity()).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SphericalHarmonics, BackwardMatchesFiniteDifferences) {
  Rng rng(3);
  ShCoefficients c;
  for (double& v : c) v = rng.normal();
  Vec3 d(0.3, -0.5, 0.7);
  const Vec3 w(rng.normal(), rng.normal(), rng.normal());
  ShCoefficients gc{};
  const Vec3 gd = sh_evaluate_backward(c, d, w, gc);
  auto f = [&] { return w.dot(sh_evaluate(c, d)); };
  for (int i = 0; i < 3; ++i) EXPECT_LT(rel_err(gd[i], central_difference(d[i], f)), 1e-7);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_LT(rel_err(gc[i], central_difference(c[i], f)), 1e-7);
}
