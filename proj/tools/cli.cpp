// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include "glossplat/checkpoint.hpp"
#include "glossplat/image_io.hpp"
#include "glossplat/losses.hpp"
#include "glossplat/metrics.hpp"
#include "glossplat/scene_io.hpp"
#include "glossplat/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace glossplat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

TrainDefaults TrainDefaults::desk() {
  TrainDefaults d;
  d.env_size = 64;
  d.residual = ResidualShape{4, 32, 32, 16, {256, 256}, 0.1};
  d.stage1_iters = 2000;
  d.stage2_iters = 500;
  return d;
}

std::vector<Frame> render_views(const Model& model, const std::vector<Camera>& cameras, const RenderOptions& options) {
  const PrefilterOperator pre(model.env.size(), model.options.prefilter);
  const EnvCubeMipmap env = pre.apply(model.env);
  std::vector<Frame> out;
  out.reserve(cameras.size());
  for (const Camera& c : cameras) out.push_back(render_frame(model, env, c, options));
  return out;
}

Model relight_model(const Model& model, const CubeImage& env) {
  Model m = model;
  m.env = env;
  m.validate();
  return m;
}

CubeImage read_envmap(const fs::path& path, int size) {
  const Image img = read_image(path);
  if (img.channels() < 3) throw std::runtime_error("envmap is not RGB: " + path.string());
  return equirect_to_cube(rgb_channels(img), size);
}

void write_envmap(const fs::path& path, const CubeImage& env, int height) {
  const int h = height > 0 ? height : 8 * env.size();
  write_image(path, cube_to_equirect(env, h, 2 * h, CubeFilter::kNearest));
}

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Vec3 to_vec3(const std::vector<double>& v) { return {v.at(0), v.at(1), v.at(2)}; }

void make_dir(const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

Image scaled(const Image& img, double scale, double offset) {
  Image out = img;
  for (double& v : out.data()) v = v * scale + offset;
  return out;
}

Image unpremultiply_rgba(const Image& rgb, const Image& alpha) {
  Image out(rgb.width(), rgb.height(), 4);
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p) {
    const double a = alpha.data()[p];
    for (int c = 0; c < 3; ++c) out.data()[p * 4 + c] = a > 0.0 ? rgb.data()[p * 3 + c] / a : 0.0;
    out.data()[p * 4 + 3] = a;
  }
  return out;
}

Scene load_views(const fs::path& manifest, int width, int height) {
  SceneLoadOptions o;
  o.load_images = false;
  o.fallback_width = width;
  o.fallback_height = height;
  return load_scene(manifest, o);
}

std::vector<Camera> cameras_of(const Scene& scene) {
  std::vector<Camera> out;
  for (const auto& v : scene.views) out.push_back(v.camera);
  return out;
}

void write_frames(const fs::path& dir, const Scene& scene, const std::vector<Frame>& frames, bool pfm, bool gbuffer,
                  std::ostream& out) {
  make_dir(dir);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string& name = scene.views[i].name;
    const Frame& f = frames[i];
    const GBuffer& gb = f.raster.gbuffer;
    const Image shown = composite(f.image, gb.alpha, scene.background);
    write_image(dir / (name + ".png"), shown);
    if (pfm) write_image(dir / (name + ".pfm"), shown);
    if (gbuffer) {
      write_image(dir / (name + "_diffuse.png"), f.shade.diffuse);
      write_image(dir / (name + "_specular.png"), f.shade.specular);
      write_image(dir / (name + "_residual.png"), scaled(f.residual_image, 1.0, 0.5));
      write_image(dir / (name + "_roughness.png"), gb.roughness);
      write_image(dir / (name + "_tint.png"), gb.tint);
      write_image(dir / (name + "_normal.png"), scaled(gb.normal, 0.5, 0.5));
      write_image(dir / (name + "_alpha.png"), gb.alpha);
      if (pfm) {
        write_image(dir / (name + "_residual.pfm"), f.residual_image);
        write_image(dir / (name + "_normal.pfm"), gb.normal);
      }
    }
  }
  std::vector<std::string> files;
  for (std::size_t i = 0; i < frames.size(); ++i) files.push_back(scene.views[i].name + (pfm ? ".pfm" : ".png"));
  write_manifest(dir / "transforms.json", cameras_of(scene), files, scene.camera_angle_x, scene.background);
  out << "wrote " << frames.size() << " view(s) to " << dir.string() << '\n';
}

json config_json(const TrainConfig& c, int env_size, const ResidualShape& shape) {
  return {{"stage1_iters", c.stage1_iters},
          {"stage2_iters", c.stage2_iters},
          {"seed", c.seed},
          {"no_residual", c.no_residual},
          {"single_level_env", c.single_level_env},
          {"sh_residual", c.sh_residual},
          {"env_size", env_size},
          {"mipmap", {shape.levels, shape.height, shape.width, shape.features}},
          {"lambda_n", c.weights.normal},
          {"lambda_d", c.weights.distortion},
          {"lambda_alpha", c.weights.alpha},
          {"prune_every", c.prune_every}};
}

std::vector<Vec3> read_points(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Failure("cannot open point file: " + path.string());
  std::vector<Vec3> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) throw Failure("malformed point in " + path.string() + ": " + line);
    pts.push_back(p);
  }
  if (pts.size() < 4) throw Failure("need at least 4 points in " + path.string());
  return pts;
}

struct TrainArgs {
  std::string scene, out, init, points, log;
  int iters1 = -1, iters2 = -1, env_res = 0, surfels = 2000, log_every = 100, downsample = 0, prune_every = 0;
  std::uint64_t seed = 0;
  bool no_residual = false, single_level = false, sh_residual = false, desk = false, no_alpha = false;
  double radius = 1.0;
  std::vector<double> center{0.0, 0.0, 0.0};
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const TrainDefaults d = a.desk ? TrainDefaults::desk() : TrainDefaults{};
  SceneLoadOptions lo;
  lo.require_alpha = !a.no_alpha;
  lo.downsample = a.downsample;
  const Scene scene = load_scene(a.scene, lo);
  const std::vector<TargetView> targets = make_targets(scene);

  TrainConfig cfg;
  cfg.stage1_iters = a.iters1 >= 0 ? a.iters1 : d.stage1_iters;
  cfg.stage2_iters = a.iters2 >= 0 ? a.iters2 : d.stage2_iters;
  cfg.seed = a.seed;
  cfg.no_residual = a.no_residual;
  cfg.single_level_env = a.single_level;
  cfg.sh_residual = a.sh_residual;
  cfg.background = scene.background;
  cfg.bounding_box = scene.bounding_box;
  cfg.log_every = a.log_every;
  cfg.prune_every = a.prune_every;

  const int env_size = a.env_res > 0 ? a.env_res : d.env_size;
  Model model;
  if (!a.init.empty()) {
    model = load_checkpoint(a.init).model;
    if (a.env_res > 0 && a.env_res != model.env.size())
      throw Failure("--env-res " + std::to_string(a.env_res) + " differs from the initial checkpoint's env size " +
                    std::to_string(model.env.size()));
  } else {
    const std::vector<Vec3> pts =
        a.points.empty() ? fibonacci_sphere(a.surfels, to_vec3(a.center), a.radius) : read_points(a.points);
    model.surfels = init_surfels(pts, a.seed);
    model.env = CubeImage(env_size, 0.5);
    model.options.prefilter.level_count = std::min(model.options.prefilter.level_count, max_prefilter_levels(env_size));
  }
  if (a.sh_residual && model.options.residual_kind != ResidualKind::kSh) {
    model.options.residual_kind = ResidualKind::kSh;
    init_residual(model, d.residual, a.seed);
  } else if (a.init.empty()) {
    init_residual(model, d.residual, a.seed);
  }

  std::ofstream log;
  if (!a.log.empty()) {
    make_dir(fs::path(a.log).parent_path());
    log.open(a.log);
    if (!log) throw Failure("cannot write log: " + a.log);
  }
  const auto on_log = [&](const TrainLogRecord& r, const Model&) {
    if (log) log << train_log_jsonl(r) << '\n';
    out << "stage " << r.stage << " iter " << r.iteration << " loss " << std::setprecision(6) << r.total << " psnr "
        << std::setprecision(4) << r.psnr << " (" << std::setprecision(3) << r.seconds << " s)\n";
  };

  Checkpoint ck;
  ck.seed = a.seed;
  ck.config_json = config_json(cfg, model.env.size(), d.residual).dump();
  make_dir(fs::path(a.out).parent_path());
  try {
    ck.model = train(std::move(model), targets, cfg, on_log).model;
  } catch (const TrainingError& e) {
    ck.model = e.last_good;
    save_checkpoint(a.out, ck);
    err << "training aborted: " << e.what() << "; last good model saved to " << a.out << '\n';
    return 3;
  }
  save_checkpoint(a.out, ck);
  out << "saved " << a.out << '\n';
  return 0;
}

struct SynthArgs {
  std::string out;
  int views = 24, test_views = 8, size = 64, surfels = 200, env_res = 64;
  double fov = 0.75, distance = 3.6, patch_roughness = 0.1, base_roughness = 0.8, noise = 0.3;
  std::uint64_t seed = 1;
  std::vector<double> background{1.0, 1.0, 1.0};
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SphereSceneOptions so;
  so.surfels = a.surfels;
  so.env_size = a.env_res;
  so.patch_roughness = a.patch_roughness;
  so.base_roughness = a.base_roughness;
  const Model truth = sphere_model(so, a.seed);
  const Vec3 bg = to_vec3(a.background);
  const fs::path root(a.out);

  const auto write_split = [&](const std::string& split, int count, double twist, bool normals) {
    const std::vector<Camera> cams = orbit_cameras(count, a.size, a.fov, a.distance, twist);
    const std::vector<Frame> frames = render_views(truth, cams, {.residual = false});
    std::vector<std::string> paths;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      std::ostringstream name;
      name << "r_" << std::setw(3) << std::setfill('0') << i;
      paths.push_back(name.str() + ".png");
      const GBuffer& gb = frames[i].raster.gbuffer;
      make_dir(root / split);
      write_image(root / split / paths.back(), unpremultiply_rgba(frames[i].image, gb.alpha));
      if (normals) {
        make_dir(root / split / "normals");
        write_image(root / split / "normals" / (name.str() + ".pfm"), gb.normal);
      }
    }
    write_manifest(root / split / "transforms.json", cams, paths, a.fov, bg);
  };
  write_split("train", a.views, 0.0, false);
  write_split("test", a.test_views, 0.37, true);
  write_envmap(root / "env.pfm", truth.env);
  write_envmap(root / "env.hdr", truth.env);
  Checkpoint ck;
  ck.seed = a.seed;
  ck.model = truth;
  save_checkpoint(root / "truth.ckpt", ck);
  perturb_materials(ck.model, a.noise, a.seed);
  ck.model.env = CubeImage(a.env_res, 0.5);
  save_checkpoint(root / "start.ckpt", ck);
  out << "wrote sphere scene to " << root.string() << '\n';
  return 0;
}

struct EvalArgs {
  std::string ckpt, scene, gt_normals, gt_env, out;
  bool no_residual = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Model model = load_checkpoint(a.ckpt).model;
  SceneLoadOptions lo;
  lo.require_alpha = false;
  const Scene scene = load_scene(a.scene, lo);
  const std::vector<TargetView> targets = make_targets(scene);
  const std::vector<Frame> frames = render_views(model, cameras_of(scene), {.residual = !a.no_residual});
  std::vector<ViewMetrics> views;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Image img = composite(frames[i].image, frames[i].raster.gbuffer.alpha, scene.background);
    ViewMetrics vm;
    vm.view = scene.views[i].name;
    vm.psnr = psnr(img, targets[i].target);
    vm.ssim = ssim_metric(img, targets[i].target);
    if (!a.gt_normals.empty()) {
      const Image gt = read_image(fs::path(a.gt_normals) / (vm.view + ".pfm"));
      const Image mask = targets[i].alpha.empty() ? Image(img.width(), img.height(), 1, 1.0) : targets[i].alpha;
      vm.normal_mae = normal_mae(frames[i].raster.gbuffer.normal, gt, mask);
    }
    views.push_back(vm);
  }
  std::optional<EnvMetrics> env;
  if (!a.gt_env.empty()) env = env_metrics(model.env, read_envmap(a.gt_env, model.env.size()));
  const std::string report = metrics_jsonl(views, env);
  make_dir(fs::path(a.out).parent_path());
  std::ofstream f(a.out);
  if (!f) throw Failure("cannot write report: " + a.out);
  f << report;
  const auto last = report.find_last_of('\n', report.size() - 2);
  out << report.substr(last == std::string::npos ? 0 : last + 1);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relightable glossy surfel reconstruction", "glossplat"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "glossplat 0.1.0");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Two-stage optimization of a scene");
  train_cmd->add_option("--scene", ta.scene, "Transforms manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", ta.out, "Output checkpoint")->required();
  train_cmd->add_option("--iters-1", ta.iters1, "Stage-1 iterations")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--iters-2", ta.iters2, "Stage-2 iterations")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", ta.seed, "Random seed");
  train_cmd->add_flag("--no-residual", ta.no_residual, "Skip stage 2");
  train_cmd->add_flag("--single-level-env", ta.single_level, "Sample only the finest env level");
  train_cmd->add_flag("--sh-residual", ta.sh_residual, "Per-surfel SH residual instead of the MLP");
  train_cmd->add_option("--env-res", ta.env_res, "Env cube face size")->check(CLI::PositiveNumber);
  train_cmd->add_flag("--desk", ta.desk, "Env 64, mipmap 4x32x32x16, 2000 + 500 iterations");
  auto* init_opt = train_cmd->add_option("--init", ta.init, "Start from a checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_option("--points", ta.points, "Initial points, one 'x y z' per line")
      ->check(CLI::ExistingFile)
      ->excludes(init_opt);
  train_cmd->add_option("--surfels", ta.surfels, "Surfels on the initial sphere")->check(CLI::Range(4, 10000000));
  train_cmd->add_option("--init-radius", ta.radius, "Initial sphere radius")->check(CLI::PositiveNumber);
  train_cmd->add_option("--init-center", ta.center, "Initial sphere center x,y,z")->delimiter(',')->expected(3);
  train_cmd->add_option("--log", ta.log, "Training log (JSON lines)");
  train_cmd->add_option("--log-every", ta.log_every, "Iterations between log records")->check(CLI::PositiveNumber);
  train_cmd->add_option("--downsample", ta.downsample, "Image downsample factor")->check(CLI::PositiveNumber);
  train_cmd->add_option("--prune-every", ta.prune_every, "Drop transparent surfels every N stage-1 iterations")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_flag("--no-alpha", ta.no_alpha, "Accept RGB images without alpha");

  std::string ckpt, views_path, out_dir, envmap;
  bool dump_gbuffer = false, pfm = false, no_residual = false;
  int width = 0, height = 0;
  auto* render_cmd = app.add_subcommand("render", "Render a checkpoint from manifest cameras");
  auto* relight_cmd = app.add_subcommand("relight", "Render with a replaced environment, residual off");
  auto* edit_cmd = app.add_subcommand("edit", "Render with edited materials, residual off");
  for (auto* c : {render_cmd, relight_cmd, edit_cmd}) {
    c->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    c->add_option("--views", views_path, "Manifest with cameras")->required()->check(CLI::ExistingFile);
    c->add_option("--out", out_dir, "Output directory")->required();
    c->add_flag("--pfm", pfm, "Also write unclamped PFM images");
    c->add_option("--width", width, "Image width when the manifest has none");
    c->add_option("--height", height, "Image height when the manifest has none");
  }
  render_cmd->add_flag("--dump-gbuffer", dump_gbuffer, "Write G-buffer and shading channels");
  render_cmd->add_flag("--no-residual", no_residual, "Render I_d + I_s only");
  relight_cmd->add_option("--envmap", envmap, "Equirect .hdr or .pfm")->required()->check(CLI::ExistingFile);
  MaterialEdit edit;
  std::vector<double> tint;
  edit_cmd->add_option("--roughness-scale", edit.roughness_scale, "Multiply roughness");
  edit_cmd->add_option("--roughness-offset", edit.roughness_offset, "Add to roughness");
  edit_cmd->add_option("--diffuse-tint", tint, "Multiply diffuse color r,g,b")->delimiter(',')->expected(3);

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Metrics against a scene's images");
  eval_cmd->add_option("--ckpt", ea.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--scene", ea.scene, "Transforms manifest")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--gt-normals", ea.gt_normals, "Directory of <view>.pfm normal maps")
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--gt-env", ea.gt_env, "Reference equirect env")->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", ea.out, "Report (JSON lines)")->required();
  eval_cmd->add_flag("--no-residual", ea.no_residual, "Evaluate I_d + I_s only");

  auto* envmap_cmd = app.add_subcommand("envmap", "Environment map tools");
  envmap_cmd->require_subcommand(1);
  auto* export_cmd = envmap_cmd->add_subcommand("export", "Write the learned env as equirect");
  std::string env_out;
  int env_height = 0;
  export_cmd->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--out", env_out, "Output .hdr or .pfm")->required();
  export_cmd->add_option("--height", env_height, "Equirect height (default 8x face size)")
      ->check(CLI::PositiveNumber);

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic glossy sphere scene");
  synth_cmd->add_option("--out", sa.out, "Output directory")->required();
  synth_cmd->add_option("--views", sa.views, "Training views")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--test-views", sa.test_views, "Held-out views")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--size", sa.size, "Image size")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--surfels", sa.surfels, "Surfel count")->check(CLI::Range(4, 1000000));
  synth_cmd->add_option("--env-res", sa.env_res, "Env cube face size")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--fov", sa.fov, "Horizontal field of view (radians)");
  synth_cmd->add_option("--distance", sa.distance, "Camera distance");
  synth_cmd->add_option("--patch-roughness", sa.patch_roughness, "Roughness of the z > 0 hemisphere");
  synth_cmd->add_option("--base-roughness", sa.base_roughness, "Roughness elsewhere");
  synth_cmd->add_option("--noise", sa.noise, "Material noise of start.ckpt");
  synth_cmd->add_option("--seed", sa.seed, "Seed");
  synth_cmd->add_option("--background", sa.background, "Background r,g,b")->delimiter(',')->expected(3);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, out, err);
    if (synth_cmd->parsed()) return cmd_synth(sa, out);
    if (eval_cmd->parsed()) return cmd_eval(ea, out);
    if (export_cmd->parsed()) {
      write_envmap(env_out, load_checkpoint(ckpt).model.env, env_height);
      out << "wrote " << env_out << '\n';
      return 0;
    }
    const Model model = load_checkpoint(ckpt).model;
    const Scene scene = load_views(views_path, width, height);
    if (render_cmd->parsed()) {
      const auto frames = render_views(model, cameras_of(scene), {.residual = !no_residual});
      write_frames(out_dir, scene, frames, pfm, dump_gbuffer, out);
    } else if (relight_cmd->parsed()) {
      const Model lit = relight_model(model, read_envmap(envmap, model.env.size()));
      write_frames(out_dir, scene, render_views(lit, cameras_of(scene), {.residual = false}), pfm, false, out);
    } else if (edit_cmd->parsed()) {
      if (!tint.empty()) edit.diffuse_tint = to_vec3(tint);
      const auto frames = render_views(model, cameras_of(scene), {.residual = false, .edit = edit});
      write_frames(out_dir, scene, frames, pfm, false, out);
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace glossplat::cli
