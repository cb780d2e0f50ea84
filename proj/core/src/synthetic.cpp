// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/synthetic.hpp"

#include "glossplat/losses.hpp"

#include <algorithm>
#include <cmath>

namespace glossplat {

CubeImage sky_env(int size) {
  const Vec3 sun = Vec3(0.4, -0.8, 0.45).normalized();
  const Vec3 warm = Vec3(-0.7, -0.1, -0.7).normalized();
  const Vec3 cool = Vec3(0.6, 0.3, -0.75).normalized();
  CubeImage env(size);
  for (int f = 0; f < 6; ++f)
    for (int j = 0; j < size; ++j)
      for (int i = 0; i < size; ++i) {
        const Vec3 d = texel_direction(f, i, j, size);
        const double up = -d.y();  // y points down
        Vec3 c = up > 0.0 ? Vec3(0.25, 0.35, 0.55) + up * Vec3(0.05, 0.1, 0.3) : Vec3(0.22, 0.18, 0.12);
        c += Vec3(0.7, 0.65, 0.5) * std::pow(std::max(0.0, d.dot(sun)), 24.0);
        c += Vec3(0.6, 0.3, 0.1) * std::pow(std::max(0.0, d.dot(warm)), 6.0);
        c += Vec3(0.1, 0.35, 0.4) * std::pow(std::max(0.0, d.dot(cool)), 10.0);
        double* t = env.texel(env.texel_index(f, i, j));
        for (int ch = 0; ch < 3; ++ch) t[ch] = std::min(c[ch], 1.0);
      }
  return env;
}

std::vector<Camera> orbit_cameras(int count, int size, double fov_x, double distance, double twist) {
  std::vector<Camera> out;
  const Mat3 r = Eigen::AngleAxisd(twist, Vec3(0.3, 1.0, 0.2).normalized()).toRotationMatrix();
  for (const Vec3& p : fibonacci_sphere(count, Vec3::Zero(), distance)) {
    const Vec3 eye = r * p;
    const Vec3 dir = -eye.normalized();
    const Vec3 up = std::abs(dir.y()) > 0.95 ? Vec3(1, 0, 0) : Vec3(0, -1, 0);
    out.push_back(Camera::look_at(intrinsics_from_fov(size, size, fov_x), eye, Vec3::Zero(), up));
  }
  return out;
}

namespace {

Vec4 quat_aligning_z(const Vec3& n) {
  const Vec3 a = std::abs(n.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  const Vec3 tu = (a - n * n.dot(a)).normalized();
  Mat3 r;
  r.col(0) = tu;
  r.col(1) = n.cross(tu);
  r.col(2) = n;
  return matrix_to_quat(r);
}

}  // namespace

Model sphere_model(const SphereSceneOptions& o, std::uint64_t seed) {
  if (o.surfels < 4) throw std::invalid_argument("sphere_model: need at least 4 surfels");
  Model m;
  m.options.residual_kind = ResidualKind::kMlp;
  m.env = sky_env(o.env_size);
  m.options.prefilter.level_count = std::min(m.options.prefilter.level_count, max_prefilter_levels(o.env_size));
  const double spacing = std::sqrt(4.0 * kPi / o.surfels);
  for (const Vec3& p : fibonacci_sphere(o.surfels, Vec3::Zero(), 1.0)) {
    Surfel s;
    s.center = p;
    s.rotation = quat_aligning_z(p.normalized());
    s.log_scales = Vec2::Constant(std::log(o.scale_factor * spacing));
    s.raw_opacity = logit(o.opacity);
    const double hue = 0.5 + 0.5 * p.x();
    s.raw_diffuse = Vec3(logit(0.15 + 0.35 * hue), logit(0.2), logit(0.45 - 0.25 * hue));
    s.raw_roughness = roughness_to_raw(p.z() > 0.0 ? o.patch_roughness : o.base_roughness);
    s.raw_tint = Vec3::Constant(logit(0.6));
    m.surfels.push_back(s);
  }
  init_residual(m, ResidualShape{}, seed);
  return m;
}

void perturb_materials(Model& model, double a, std::uint64_t seed) {
  Rng rng(hash_combine(seed, 0x73636e));
  for (Surfel& s : model.surfels) {
    for (int c = 0; c < 3; ++c) s.raw_diffuse[c] += rng.uniform(-a, a);
    s.raw_roughness += rng.uniform(-a, a);
    for (int c = 0; c < 3; ++c) s.raw_tint[c] += rng.uniform(-a, a);
  }
}

std::vector<TargetView> render_targets(const Model& model, const std::vector<Camera>& cameras, const Vec3& bg) {
  const PrefilterOperator pre(model.env.size(), model.options.prefilter);
  const EnvCubeMipmap env = pre.apply(model.env);
  std::vector<TargetView> out;
  for (const Camera& c : cameras) {
    const Frame f = render_frame(model, env, c, {.residual = false, .edit = {}});
    out.push_back({c, composite(f.image, f.raster.gbuffer.alpha, bg), f.raster.gbuffer.alpha});
  }
  return out;
}

}  // namespace glossplat
