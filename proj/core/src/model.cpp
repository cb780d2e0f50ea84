// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace glossplat {

void Model::validate() const {
  if (env.size() <= 0) throw std::invalid_argument("Model: missing environment map");
  for (const Surfel& s : surfels) {
    const bool finite = s.center.allFinite() && s.rotation.allFinite() && s.log_scales.allFinite() &&
                        std::isfinite(s.raw_opacity) && s.raw_diffuse.allFinite() && std::isfinite(s.raw_roughness) &&
                        s.raw_tint.allFinite() && s.feature.allFinite();
    if (!finite) throw std::invalid_argument("Model: non-finite surfel parameter");
    if (s.rotation.norm() == 0.0) throw std::invalid_argument("Model: zero quaternion");
  }
  if (options.residual_kind == ResidualKind::kSh && !sh.empty() && sh.size() != surfels.size())
    throw std::invalid_argument("Model: SH coefficient count does not match surfels");
}

void init_residual(Model& model, const ResidualShape& shape, std::uint64_t seed) {
  model.mip = SphericalFeatureMipmap(shape.levels, shape.height, shape.width, shape.features);
  model.mip.randomize(hash_combine(seed, 0x6d6970), shape.init_scale);
  model.mlp = ResidualMlp(shape.features, kFeatureDim, shape.hidden, hash_combine(seed, 0x6d6c70));
  model.sh.clear();
  if (model.options.residual_kind == ResidualKind::kSh) model.sh.assign(model.surfels.size(), ShCoefficients{});
}

std::vector<Vec3> fibonacci_sphere(int count, const Vec3& center, double radius) {
  std::vector<Vec3> pts;
  pts.reserve(count);
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    pts.push_back(center + radius * Vec3(r * std::cos(phi), r * std::sin(phi), z));
  }
  return pts;
}

std::vector<Surfel> init_surfels(std::span<const Vec3> points, std::uint64_t seed, const SurfelInit& init) {
  Rng rng(seed);
  std::vector<Surfel> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<double> d;
    d.reserve(points.size());
    for (std::size_t j = 0; j < points.size(); ++j)
      if (j != i) d.push_back((points[i] - points[j]).norm());
    const std::size_t k = std::min<std::size_t>(3, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) mean += d[j];
    const double sigma = k > 0 && mean > 0.0 ? mean / static_cast<double>(k) : 0.01;

    Surfel s;
    s.center = points[i];
    s.rotation = Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
    s.log_scales = Vec2::Constant(std::log(sigma));
    s.raw_opacity = logit(init.opacity);
    s.raw_diffuse = Vec3::Constant(logit(init.diffuse));
    s.raw_roughness = roughness_to_raw(init.roughness);
    s.raw_tint = Vec3::Constant(logit(init.tint));
    out.push_back(s);
  }
  return out;
}

ModelGrad::ModelGrad(const Model& like)
    : surfels(like.surfels.size()),
      sh(like.sh.size(), ShCoefficients{}),
      env(like.env.size()),
      residual(like.mip.levels() > 0 ? zero_residual_grad(like.mip, like.mlp) : ResidualGrad{}) {}

void ModelGrad::zero() {
  std::fill(surfels.begin(), surfels.end(), SurfelGrad{});
  std::fill(sh.begin(), sh.end(), ShCoefficients{});
  std::fill(env.data().begin(), env.data().end(), 0.0);
  std::fill(residual.mip.data().begin(), residual.mip.data().end(), 0.0);
  for (auto& l : residual.mlp) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

namespace {

template <typename S, typename Mlp>
std::vector<ParamView> views(std::vector<S>& surfels, std::vector<ShCoefficients>& sh, CubeImage& env,
                             std::vector<double>& mip, Mlp& layers) {
  std::vector<ParamView> v;
  auto add = [&](const char* g, double* p, std::size_t n) { v.push_back({g, std::span<double>(p, n)}); };
  for (auto& s : surfels) {
    add("position", s.center.data(), 3);
    add("rotation", s.rotation.data(), 4);
    add("scale", s.log_scales.data(), 2);
    add("opacity", &s.raw_opacity, 1);
    add("diffuse", s.raw_diffuse.data(), 3);
    add("roughness", &s.raw_roughness, 1);
    add("tint", s.raw_tint.data(), 3);
    add("feature", s.feature.data(), 4);
  }
  for (auto& c : sh) add("sh", c.data(), c.size());
  add("env", env.data().data(), env.data().size());
  if (!mip.empty()) add("mipmap", mip.data(), mip.size());
  for (auto& l : layers) {
    add("mlp", l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    add("mlp", l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return v;
}

}  // namespace

std::vector<ParamView> parameter_views(Model& m) {
  return views(m.surfels, m.sh, m.env, m.mip.data(), m.mlp.layers());
}

std::vector<ParamView> gradient_views(ModelGrad& g) {
  return views(g.surfels, g.sh, g.env, g.residual.mip.data(), g.residual.mlp);
}

void project_parameters(Model& model) {
  for (Surfel& s : model.surfels) {
    const double n = s.rotation.norm();
    if (n > 0.0) s.rotation /= n;
  }
  for (double& v : model.env.data()) v = std::max(v, 0.0);
}

}  // namespace glossplat
