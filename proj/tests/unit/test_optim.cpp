// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"
#include "glossplat/gradcheck.hpp"
#include "glossplat/optim.hpp"

#include <gtest/gtest.h>

using namespace glossplat;
using namespace glossplat::testing;

namespace {

const ParamGroup& find(const std::vector<ParamGroup>& groups, const std::string& name) {
  for (const auto& g : groups)
    if (g.name == name) return g;
  throw std::runtime_error("missing group " + name);
}

}  // namespace

TEST(ExpDecay, Endpoints) {
  const auto groups = default_param_groups(30000, 30000);
  const ExpDecay env = find(groups, "env").lr;
  EXPECT_EQ(env.at(0), 1e-2);
  EXPECT_EQ(env.at(30000), 1e-3);
  const ExpDecay pos = find(groups, "position").lr;
  EXPECT_EQ(pos.at(0), 1.6e-4);
  EXPECT_EQ(pos.at(30000), 1.6e-6);
  EXPECT_EQ(pos.at(40000), 1.6e-6);
}

TEST(ExpDecay, MonotoneDecreasing) {
  const ExpDecay d{1e-2, 1e-3, 1000};
  for (int t = 1; t <= 1000; ++t) EXPECT_LT(d.at(t), d.at(t - 1));
  EXPECT_NEAR(d.at(500), std::sqrt(1e-2 * 1e-3), 1e-15);
}

TEST(ExpDecay, Validation) {
  EXPECT_THROW((ExpDecay{0.0, 1e-3, 10}.validate()), std::invalid_argument);
  EXPECT_THROW((ExpDecay{1e-2, 1e-3, 0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW(ExpDecay::constant(1e-3).validate());
}

TEST(DefaultGroups, ConstantRates) {
  const auto groups = default_param_groups(100, 100);
  EXPECT_EQ(find(groups, "mlp").lr.at(50), 1e-3);
  EXPECT_EQ(find(groups, "mipmap").lr.at(50), 1e-2);
  EXPECT_EQ(find(groups, "rotation").lr.at(50), 1e-2);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<double> x{1.0, -2.0, 3.0}, g(3, 0.0);
  const auto before = x;
  Adam adam({{"a", ExpDecay::constant(0.1)}});
  for (int i = 0; i < 5; ++i) adam.step({{"a", x}}, {{"a", g}});
  EXPECT_EQ(x, before);
  EXPECT_EQ(adam.steps("a"), 5);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> x{1.0, -2.0}, g{0.5, -3.0};
  Adam adam({{"a", ExpDecay::constant(0.1)}});
  adam.step({{"a", x}}, {{"a", g}});
  EXPECT_NEAR(x[0], 0.9, 1e-12);
  EXPECT_NEAR(x[1], -1.9, 1e-12);
}

TEST(Adam, UnlistedGroupsAreFrozen) {
  std::vector<double> a{1.0}, b{1.0}, ga{1.0}, gb{1.0};
  Adam adam({{"a", ExpDecay::constant(0.1)}});
  adam.step({{"a", a}, {"b", b}}, {{"a", ga}, {"b", gb}});
  EXPECT_NE(a[0], 1.0);
  EXPECT_EQ(b[0], 1.0);
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<double> x{3.0, -4.0}, g(2);
  Adam adam({{"a", ExpDecay{0.1, 1e-3, 2000}}});
  for (int i = 0; i < 2000; ++i) {
    for (int k = 0; k < 2; ++k) g[k] = 2.0 * (x[k] - 1.0);
    adam.step({{"a", x}}, {{"a", g}});
  }
  EXPECT_NEAR(x[0], 1.0, 1e-3);
  EXPECT_NEAR(x[1], 1.0, 1e-3);
}

TEST(Adam, LearningRateFollowsStepCount) {
  std::vector<double> x{0.0}, g{1.0};
  Adam adam({{"a", ExpDecay{1e-2, 1e-3, 10}}});
  EXPECT_EQ(adam.learning_rate("a"), 1e-2);
  for (int i = 0; i < 10; ++i) adam.step({{"a", x}}, {{"a", g}});
  EXPECT_EQ(adam.learning_rate("a"), 1e-3);
}

TEST(Adam, RetainKeepsSurvivingMoments) {
  std::vector<double> a{1.0}, b{2.0}, ga{0.3}, gb{-0.7};
  std::vector<double> b2{2.0};
  Adam both({{"x", ExpDecay::constant(0.1)}});
  Adam single({{"x", ExpDecay::constant(0.1)}});
  for (int i = 0; i < 3; ++i) {
    both.step({{"x", a}, {"x", b}}, {{"x", ga}, {"x", gb}});
    single.step({{"x", b2}}, {{"x", gb}});
  }
  both.retain({false, true});
  for (int i = 0; i < 3; ++i) {
    gb[0] = 0.2 * i - 0.5;
    both.step({{"x", b}}, {{"x", gb}});
    single.step({{"x", b2}}, {{"x", gb}});
  }
  EXPECT_EQ(b, b2);
  EXPECT_THROW(both.retain({true, true}), std::invalid_argument);
}

TEST(Gradcheck, ConstantLossReportsZero) {
  std::vector<double> x{1.0, 2.0}, g{0.0, 0.0};
  const auto rep = gradcheck({{"x", x}}, {{"x", g}}, [] { return 0.0; });
  ASSERT_EQ(rep.groups.size(), 1u);
  EXPECT_EQ(rep.groups[0].max_relative_error, 0.0);
  EXPECT_EQ(rep.groups[0].checked, 2u);
}

TEST(Gradcheck, FlagsCorruptedGroup) {
  std::vector<double> x{0.3, -0.7}, y{1.2};
  auto loss = [&] { return std::sin(x[0]) * x[1] + y[0] * y[0] * y[0]; };
  std::vector<double> gx{std::cos(x[0]) * x[1], std::sin(x[0])}, gy{3.0 * y[0] * y[0]};
  auto rep = gradcheck({{"x", x}, {"y", y}}, {{"x", gx}, {"y", gy}}, loss);
  EXPECT_TRUE(rep.failing(1e-6).empty());
  gy[0] *= 2.0;
  rep = gradcheck({{"x", x}, {"y", y}}, {{"x", gx}, {"y", gy}}, loss);
  EXPECT_EQ(rep.failing(1e-6), std::vector<std::string>{"y"});
  EXPECT_NEAR(rep.groups[1].max_relative_error, 1.0 / 3.0, 1e-6);
  EXPECT_EQ(x[0], 0.3);
}

TEST(Gradcheck, RelativeErrorFiltersTinyDenominators) {
  EXPECT_EQ(relative_error(1e-10, -1e-10), 0.0);
  EXPECT_EQ(relative_error(1.0, 3.0), 0.5);
}
