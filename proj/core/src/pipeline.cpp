// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/pipeline.hpp"

#include "glossplat/metrics.hpp"

#include <stdexcept>

namespace glossplat {

namespace {

bool mlp_residual(const Model& m, const RenderOptions& o) {
  return o.residual && m.options.residual_kind == ResidualKind::kMlp && m.mip.levels() > 0 && !m.mlp.layers().empty();
}

bool sh_residual(const Model& m, const RenderOptions& o) {
  return o.residual && m.options.residual_kind == ResidualKind::kSh && m.sh.size() == m.surfels.size() &&
         !m.surfels.empty();
}

}  // namespace

std::vector<Vec3> sh_colors(const Model& model, const Camera& camera) {
  std::vector<Vec3> out(model.surfels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3 d = model.surfels[i].center - camera.position();
    out[i] = sh_evaluate(model.sh[i], d / d.norm());
  }
  return out;
}

Frame render_frame(const Model& model, const EnvCubeMipmap& env, const Camera& camera, const RenderOptions& opt) {
  Frame f;
  RasterOptions ro;
  ro.edit = opt.edit;
  if (sh_residual(model, opt)) {
    f.sh_colors = sh_colors(model, camera);
    ro.extra_color = f.sh_colors;
  }
  f.raster = rasterize(model.surfels, camera, ro);
  const GBuffer& gb = f.raster.gbuffer;
  f.shade = shade_deferred(gb, camera, env, model.options.single_level_env);
  f.image = f.shade.diffuse;
  for (std::size_t i = 0; i < f.image.size(); ++i) f.image.data()[i] += f.shade.specular.data()[i];
  if (mlp_residual(model, opt)) {
    f.residual = render_residual_image(gb, camera, model.mip, model.mlp);
    f.residual_image = f.residual->image;
  } else if (gb.has_extra()) {
    f.residual_image = gb.extra;
  } else {
    f.residual_image = Image(gb.width(), gb.height(), 3);
  }
  if (f.residual || gb.has_extra())
    for (std::size_t i = 0; i < f.image.size(); ++i) f.image.data()[i] += f.residual_image.data()[i];
  return f;
}

LossReport evaluate_objective(const Model& model, const EnvCubeMipmap& env, const TargetView& view,
                              const ObjectiveOptions& opt, ModelGrad* grad, const PrefilterOperator* prefilter) {
  if (grad && !prefilter) throw std::invalid_argument("evaluate_objective: gradients need the prefilter operator");
  RenderOptions ro;
  ro.residual = opt.residual;
  const Frame f = render_frame(model, env, view.camera, ro);
  const GBuffer& gb = f.raster.gbuffer;
  const Camera& cam = view.camera;
  const Vec3 bg = opt.background;

  LossReport rep;
  const Image composed = composite(f.image, gb.alpha, bg);
  Image d_composed;
  const PhotometricLoss pl = photometric_loss(composed, view.target, opt.weights.ssim_mix, grad ? &d_composed : nullptr);
  rep.parts.color = pl.value;
  rep.psnr = psnr(composed, view.target);

  GBufferGrad gg(gb);
  RecordGrad rg(f.raster.records);
  const bool use_alpha = opt.geometry_losses && !view.alpha.empty();
  Image depth_normals;
  Image d_normals;
  if (opt.geometry_losses) {
    depth_normals = depth_to_normals(gb.depth, gb.alpha, cam);
    if (grad) d_normals = Image(gb.width(), gb.height(), 3);
    rep.parts.normal = normal_consistency_loss(f.raster.records, depth_normals, grad ? &rg : nullptr,
                                               grad ? &d_normals : nullptr, opt.weights.normal);
    if (opt.distortion_near > 0.0) {
      RayBlendRecords mapped = f.raster.records;
      for (BlendHit& h : mapped.hits) h.depth = ndc_depth(h.depth, opt.distortion_near, opt.distortion_far);
      RecordGrad mg(mapped);
      rep.parts.distortion = depth_distortion_loss(mapped, grad ? &mg : nullptr, opt.weights.distortion);
      if (grad)
        for (std::size_t i = 0; i < mapped.hits.size(); ++i) {
          rg.weight[i] += mg.weight[i];
          rg.depth[i] +=
              mg.depth[i] * ndc_depth_grad(f.raster.records.hits[i].depth, opt.distortion_near, opt.distortion_far);
        }
    } else {
      rep.parts.distortion = depth_distortion_loss(f.raster.records, grad ? &rg : nullptr, opt.weights.distortion);
    }
    if (use_alpha) rep.parts.alpha = alpha_loss(gb.alpha, view.alpha, grad ? &gg.alpha : nullptr, opt.weights.alpha);
  }
  if (opt.bounding_box)
    rep.bounding_box = opt.bounding_box_weight *
                       bounding_volume_roughness_penalty(model.surfels, *opt.bounding_box,
                                                         grad ? &grad->surfels : nullptr, opt.bounding_box_weight);
  rep.total = total_loss(rep.parts, opt.weights) + rep.bounding_box;
  if (!grad) return rep;

  // image -> composite
  const std::size_t P = gb.alpha.pixel_count();
  for (std::size_t p = 0; p < P; ++p) {
    double ga = 0.0;
    for (int c = 0; c < 3; ++c) ga -= d_composed.data()[p * 3 + c] * bg[c];
    gg.alpha.data()[p] += ga;
  }
  const Image& d_image = d_composed;
  for (std::size_t i = 0; i < d_image.size(); ++i) gg.diffuse.data()[i] += d_image.data()[i];

  std::vector<CubeImage> level_grads = zero_level_grads(env);
  shade_deferred_backward(gb, cam, env, f.shade, d_image, gg, &level_grads, model.options.single_level_env);
  if (f.residual)
    render_residual_backward(gb, cam, model.mip, model.mlp, *f.residual, d_image, gg, grad->residual);
  if (gb.has_extra())
    for (std::size_t i = 0; i < d_image.size(); ++i) gg.extra.data()[i] += d_image.data()[i];
  if (opt.geometry_losses) depth_to_normals_backward(gb.depth, gb.alpha, cam, d_normals, gg.depth);

  const RasterGrad rgrad = rasterize_backward(model.surfels, cam, f.raster, gg, f.sh_colors, &rg);
  for (std::size_t i = 0; i < model.surfels.size(); ++i) grad->surfels[i] += rgrad.surfels[i];
  if (!f.sh_colors.empty()) {
    for (std::size_t i = 0; i < model.surfels.size(); ++i) {
      const Vec3 d = model.surfels[i].center - cam.position();
      const double len = d.norm();
      const Vec3 dir = d / len;
      const Vec3 g_dir = sh_evaluate_backward(model.sh[i], dir, rgrad.extra_color[i], grad->sh[i]);
      grad->surfels[i].center += (g_dir - dir * dir.dot(g_dir)) / len;
    }
  }
  prefilter->backward(level_grads, grad->env);
  return rep;
}

}  // namespace glossplat
