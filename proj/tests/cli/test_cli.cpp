// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"
#include "glossplat/checkpoint.hpp"
#include "glossplat/image_io.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace glossplat;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

double max_abs_diff(const Image& a, const Image& b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

nlohmann::json aggregate(const fs::path& report) {
  std::istringstream lines(slurp(report));
  std::string line, last;
  while (std::getline(lines, line))
    if (!line.empty()) last = line;
  return nlohmann::json::parse(last)["aggregate"];
}

// One small synthetic scene shared by every test.
class CliTest : public ::testing::Test {
 protected:
  static fs::path root;

  static void SetUpTestSuite() {
    root = fs::path(::testing::TempDir()) / "glossplat_cli";
    fs::remove_all(root);
    const Result r = run({"synth", "--out", (root / "scene").string(), "--views", "4", "--test-views", "2", "--size",
                          "24", "--surfels", "60", "--env-res", "16"});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  static std::string scene(const std::string& rel) { return (root / "scene" / rel).string(); }
  static std::string path(const std::string& rel) { return (root / rel).string(); }

  static Result train_small(const std::string& out) {
    return run({"train", "--scene", scene("train/transforms.json"), "--init", scene("start.ckpt"), "--out", out,
                "--iters-1", "20", "--iters-2", "5", "--seed", "4", "--log", out + ".jsonl", "--log-every", "5"});
  }
};

fs::path CliTest::root;

TEST_F(CliTest, SynthWritesScene) {
  for (const char* f : {"train/transforms.json", "test/transforms.json", "train/r_000.png", "test/normals/r_001.pfm",
                        "env.pfm", "env.hdr", "truth.ckpt", "start.ckpt"})
    EXPECT_TRUE(fs::exists(scene(f))) << f;
  const Image img = read_image(scene("train/r_000.png"));
  EXPECT_EQ(img.width(), 24);
  EXPECT_EQ(img.channels(), 4);
}

TEST_F(CliTest, TrainRenderEvalRoundTrip) {
  const Result t = train_small(path("a.ckpt"));
  ASSERT_EQ(t.code, 0) << t.err;
  const Checkpoint ck = load_checkpoint(path("a.ckpt"));
  EXPECT_EQ(ck.model.env.size(), 16);
  EXPECT_EQ(nlohmann::json::parse(ck.config_json)["stage1_iters"], 20);

  const Result r = run({"render", "--ckpt", path("a.ckpt"), "--views", scene("test/transforms.json"), "--out",
                        path("render"), "--pfm", "--dump-gbuffer"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"r_000.png", "r_000.pfm", "r_000_diffuse.png", "r_000_specular.png", "r_000_residual.pfm",
                        "r_000_roughness.png", "r_000_tint.png", "r_000_normal.pfm", "r_001_alpha.png"})
    EXPECT_TRUE(fs::exists(path("render/" + std::string(f)))) << f;

  const Result e = run({"eval", "--ckpt", path("a.ckpt"), "--scene", scene("test/transforms.json"), "--gt-normals",
                        scene("test/normals"), "--gt-env", scene("env.pfm"), "--out", path("a_report.jsonl")});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto agg = aggregate(path("a_report.jsonl"));
  EXPECT_GT(agg["psnr"].get<double>(), 15.0);
  EXPECT_TRUE(agg.contains("mae"));
  EXPECT_TRUE(agg.contains("env_psnr"));
}

TEST_F(CliTest, EvalOfGroundTruthIsNearPerfect) {
  const Result e = run({"eval", "--ckpt", scene("truth.ckpt"), "--scene", scene("test/transforms.json"),
                        "--gt-normals", scene("test/normals"), "--gt-env", scene("env.pfm"), "--out",
                        path("truth_report.jsonl"), "--no-residual"});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto agg = aggregate(path("truth_report.jsonl"));
  EXPECT_GT(agg["psnr"].get<double>(), 45.0);  // 8-bit targets
  EXPECT_GT(agg["ssim"].get<double>(), 0.999);
  EXPECT_LT(agg["mae"].get<double>(), 1e-4);
  EXPECT_EQ(agg["env_psnr"].get<double>(), 100.0);
}

TEST_F(CliTest, EvalAgainstOwnRenderIsExact) {
  ASSERT_EQ(run({"render", "--ckpt", scene("truth.ckpt"), "--views", scene("test/transforms.json"), "--out",
                 path("self"), "--pfm"})
                .code,
            0);
  const Result e = run({"eval", "--ckpt", scene("truth.ckpt"), "--scene", path("self/transforms.json"), "--out",
                        path("self_report.jsonl")});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto agg = aggregate(path("self_report.jsonl"));
  EXPECT_EQ(agg["psnr"].get<double>(), 100.0);
  EXPECT_NEAR(agg["ssim"].get<double>(), 1.0, 1e-9);
}

TEST_F(CliTest, TrainingIsDeterministic) {
  ASSERT_EQ(train_small(path("d1.ckpt")).code, 0);
  ASSERT_EQ(train_small(path("d2.ckpt")).code, 0);
  EXPECT_EQ(slurp(path("d1.ckpt")), slurp(path("d2.ckpt")));
  EXPECT_EQ(slurp(path("d1.ckpt.jsonl")), slurp(path("d2.ckpt.jsonl")));
}

TEST_F(CliTest, ExportedEnvRelightsLikeTheModel) {
  ASSERT_EQ(run({"envmap", "export", "--ckpt", scene("truth.ckpt"), "--out", path("env_out.pfm")}).code, 0);
  const Result a = run({"render", "--ckpt", scene("truth.ckpt"), "--views", scene("test/transforms.json"), "--out",
                        path("plain"), "--pfm", "--no-residual"});
  ASSERT_EQ(a.code, 0) << a.err;
  const Result b = run({"relight", "--ckpt", scene("truth.ckpt"), "--views", scene("test/transforms.json"), "--out",
                        path("relit"), "--pfm", "--envmap", path("env_out.pfm")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_LE(max_abs_diff(read_image(path("plain/r_000.pfm")), read_image(path("relit/r_000.pfm"))), 1e-3);
}

TEST_F(CliTest, RoughnessEditsChangeSharpness) {
  ASSERT_EQ(run({"edit", "--ckpt", scene("truth.ckpt"), "--views", scene("test/transforms.json"), "--out",
                 path("mirror"), "--pfm", "--roughness-scale", "0"})
                .code,
            0);
  ASSERT_EQ(run({"render", "--ckpt", scene("truth.ckpt"), "--views", scene("test/transforms.json"), "--out",
                 path("orig"), "--pfm", "--no-residual"})
                .code,
            0);
  ASSERT_EQ(run({"edit", "--ckpt", scene("truth.ckpt"), "--views", scene("test/transforms.json"), "--out",
                 path("rough"), "--pfm", "--roughness-offset", "1"})
                .code,
            0);
  const Image a = read_image(path("mirror/r_000.pfm")), b = read_image(path("orig/r_000.pfm"));
  const Image c = read_image(path("rough/r_000.pfm"));
  auto tv = [](const Image& im) {
    double s = 0.0;
    for (int y = 0; y < im.height(); ++y)
      for (int x = 1; x < im.width(); ++x)
        for (int c = 0; c < 3; ++c) s += std::abs(im.at(x, y, c) - im.at(x - 1, y, c));
    return s;
  };
  EXPECT_GT(tv(a), tv(b));
  EXPECT_LT(tv(c), tv(b));
}

TEST_F(CliTest, BadArgumentsFail) {
  EXPECT_NE(run({}).code, 0);
  EXPECT_NE(run({"train", "--scene", scene("train/transforms.json")}).code, 0);
  EXPECT_NE(run({"train", "--scene", path("missing.json"), "--out", path("x.ckpt")}).code, 0);
  EXPECT_NE(run({"render", "--ckpt", scene("train/r_000.png"), "--views", scene("test/transforms.json"), "--out",
                 path("bad")})
                .code,
            0);
  EXPECT_NE(run({"bogus"}).code, 0);
}

}  // namespace
