// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"
#include "glossplat/metrics.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sstream>

using namespace glossplat;
using namespace glossplat::testing;

TEST(Psnr, IdenticalIsCapped) {
  const Image a(8, 8, 3, 0.3);
  EXPECT_EQ(psnr(a, a), 100.0);
  EXPECT_NEAR(ssim_metric(a, a), 1.0, 1e-12);
}

TEST(Psnr, TwentyDecibels) {
  const Image a(8, 8, 3, 0.5), b(8, 8, 3, 0.6);  // MSE = 0.01
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-10);
}

TEST(Psnr, DimensionMismatch) { EXPECT_THROW(psnr(Image(2, 2, 3), Image(2, 2, 1)), std::invalid_argument); }

TEST(NormalMae, UniformRotation) {
  Image gt(6, 5, 3), n(6, 5, 3), mask(6, 5, 1, 1.0);
  const double angle = 5.0 * kPi / 180.0;
  Rng rng(1);
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    const Vec3 a = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const Vec3 axis = a.unitOrthogonal();
    const Vec3 b = Eigen::AngleAxisd(angle, axis) * a;
    for (int c = 0; c < 3; ++c) {
      gt.data()[p * 3 + c] = a[c];
      n.data()[p * 3 + c] = 0.7 * b[c];  // unnormalized blend is fine
    }
  }
  EXPECT_NEAR(normal_mae(n, gt, mask), 5.0, 1e-9);
  mask.fill(0.0);
  EXPECT_EQ(normal_mae(n, gt, mask), 0.0);
}

TEST(EnvMetrics, IdenticalEnv) {
  const CubeImage env = smooth_env(16);
  const EnvMetrics m = env_metrics(env, env);
  EXPECT_EQ(m.psnr, 100.0);
  EXPECT_NEAR(m.ssim, 1.0, 1e-12);
}

TEST(MetricsReport, OneRecordPerViewPlusAggregate) {
  const std::string s = metrics_jsonl({{"a", 30.0, 0.9, 2.0}, {"b", 20.0, 0.8, std::nullopt}}, EnvMetrics{18.0, 0.7});
  std::istringstream in(s);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["view"], "a");
  EXPECT_EQ(rows[0]["mae"], 2.0);
  EXPECT_FALSE(rows[1].contains("mae"));
  EXPECT_EQ(rows[2]["aggregate"]["psnr"], 25.0);
  EXPECT_EQ(rows[2]["aggregate"]["env_psnr"], 18.0);
}
