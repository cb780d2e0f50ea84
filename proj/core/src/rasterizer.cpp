// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/rasterizer.hpp"

#include "glossplat/parallel.hpp"

#include <algorithm>
#include <numeric>

namespace glossplat {

namespace {

// Fixed so that reductions do not depend on the machine's thread count.
constexpr std::size_t kReductionChunks = 16;

struct TileGrid {
  int tiles_x = 1;
  int tiles_y = 1;
  bool whole_image = false;
  std::vector<std::vector<int>> lists;  // per tile, in global sort order

  int count() const { return tiles_x * tiles_y; }
};

// Pixel-space bounds of the region where opacity * G >= 1/255 can occur.
// Returns false when the surfel can never pass the blend threshold.
bool screen_bounds(const Surfel& s, const Camera& cam, int& x0, int& x1, int& y0, int& y1) {
  const double alpha = s.opacity();
  if (alpha * 255.0 < 1.0) return false;
  const double cutoff = std::sqrt(2.0 * std::log(255.0 * alpha));
  const SurfelFrame f = s.frame();
  const Vec2 sc = s.scales();
  const Vec3 du = cutoff * sc[0] * f.t_u;
  const Vec3 dv = cutoff * sc[1] * f.t_v;
  double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
  for (int i = 0; i < 4; ++i) {
    const Vec3 corner = s.center + ((i & 1) ? du : Vec3(-du)) + ((i & 2) ? dv : Vec3(-dv));
    const Vec3 pc = cam.world_to_camera(corner);
    if (pc.z() <= 1e-6) {
      x0 = 0;
      y0 = 0;
      x1 = cam.width() - 1;
      y1 = cam.height() - 1;
      return true;
    }
    const Vec2 px = cam.project_camera(pc);
    minx = std::min(minx, px.x());
    maxx = std::max(maxx, px.x());
    miny = std::min(miny, px.y());
    maxy = std::max(maxy, px.y());
  }
  // pixel centers sit at +0.5; one pixel of slack
  const double lim = 1e9;
  x0 = static_cast<int>(std::floor(std::clamp(minx - 0.5, -lim, lim))) - 1;
  x1 = static_cast<int>(std::ceil(std::clamp(maxx - 0.5, -lim, lim))) + 1;
  y0 = static_cast<int>(std::floor(std::clamp(miny - 0.5, -lim, lim))) - 1;
  y1 = static_cast<int>(std::ceil(std::clamp(maxy - 0.5, -lim, lim))) + 1;
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, cam.width() - 1);
  y1 = std::min(y1, cam.height() - 1);
  return x0 <= x1 && y0 <= y1;
}

TileGrid bin_surfels(std::span<const Surfel> surfels, const Camera& cam, const std::vector<int>& order, bool tiled) {
  TileGrid grid;
  if (!tiled) {
    grid.whole_image = true;
    grid.lists.assign(1, order);
    return grid;
  }
  grid.tiles_x = (cam.width() + kTileSize - 1) / kTileSize;
  grid.tiles_y = (cam.height() + kTileSize - 1) / kTileSize;
  grid.lists.resize(grid.count());
  for (int idx : order) {
    int x0, x1, y0, y1;
    if (!screen_bounds(surfels[idx], cam, x0, x1, y0, y1)) continue;
    for (int ty = y0 / kTileSize; ty <= y1 / kTileSize; ++ty)
      for (int tx = x0 / kTileSize; tx <= x1 / kTileSize; ++tx) grid.lists[ty * grid.tiles_x + tx].push_back(idx);
  }
  return grid;
}

// Pixel rectangle covered by tile t (the whole image for an untiled grid).
void tile_rect(const TileGrid& g, const Camera& cam, int t, int& x0, int& x1, int& y0, int& y1) {
  if (g.whole_image) {
    x0 = 0;
    y0 = 0;
    x1 = cam.width();
    y1 = cam.height();
    return;
  }
  const int tx = t % g.tiles_x, ty = t / g.tiles_x;
  x0 = tx * kTileSize;
  y0 = ty * kTileSize;
  x1 = std::min(x0 + kTileSize, cam.width());
  y1 = std::min(y0 + kTileSize, cam.height());
}

struct TileRecords {
  std::vector<BlendHit> hits;
  std::vector<std::size_t> start;  // per pixel in the tile, row-major within the tile
  std::vector<std::size_t> count;
};

}  // namespace

GBuffer::GBuffer(int width, int height, bool with_extra)
    : diffuse(width, height, 3), roughness(width, height, 1), tint(width, height, 3), feature(width, height, 4),
      normal(width, height, 3), alpha(width, height, 1), depth(width, height, 1) {
  if (with_extra) extra = Image(width, height, 3);
}

GBufferGrad::GBufferGrad(const GBuffer& like)
    : diffuse(like.width(), like.height(), 3), roughness(like.width(), like.height(), 1),
      tint(like.width(), like.height(), 3), feature(like.width(), like.height(), 4),
      normal(like.width(), like.height(), 3), alpha(like.width(), like.height(), 1),
      depth(like.width(), like.height(), 1) {
  if (like.has_extra()) extra = Image(like.width(), like.height(), 3);
}

std::vector<int> sort_surfels(std::span<const Surfel> surfels, const Camera& camera) {
  std::vector<double> depth(surfels.size());
  for (std::size_t i = 0; i < surfels.size(); ++i) depth[i] = camera.view_depth(surfels[i].center);
  std::vector<int> order(surfels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return depth[a] < depth[b]; });
  return order;
}

PropVector surfel_properties(const Surfel& s, const MaterialEdit& edit, const Vec3* extra) {
  PropVector p{};
  Vec3 diffuse = s.diffuse();
  double rough = s.roughness();
  if (!edit.is_identity()) {
    diffuse = diffuse.cwiseProduct(edit.diffuse_tint).cwiseMax(0.0).cwiseMin(1.0);
    rough = std::clamp(edit.roughness_scale * rough + edit.roughness_offset, kRoughnessMin, 1.0);
  }
  const Vec3 tint = s.tint();
  for (int c = 0; c < 3; ++c) {
    p[prop::kDiffuse + c] = diffuse[c];
    p[prop::kTint + c] = tint[c];
    if (extra) p[prop::kExtra + c] = (*extra)[c];
  }
  p[prop::kRoughness] = rough;
  for (int c = 0; c < kFeatureDim; ++c) p[prop::kFeature + c] = s.feature[c];
  return p;
}

RasterOutput rasterize(std::span<const Surfel> surfels, const Camera& camera, const RasterOptions& options) {
  const bool with_extra = !options.extra_color.empty();
  if (with_extra && options.extra_color.size() != surfels.size())
    throw std::invalid_argument("rasterize: extra_color must have one entry per surfel");

  const int W = camera.width(), H = camera.height();
  RasterOutput out;
  out.gbuffer = GBuffer(W, H, with_extra);
  out.order = sort_surfels(surfels, camera);

  std::vector<PropVector> props(surfels.size());
  std::vector<double> opacity(surfels.size());
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    props[i] = surfel_properties(surfels[i], options.edit, with_extra ? &options.extra_color[i] : nullptr);
    opacity[i] = surfels[i].opacity();
  }
  const int nprops = with_extra ? prop::kCount : prop::kExtra;

  const TileGrid grid = bin_surfels(surfels, camera, out.order, options.tiled);
  std::vector<TileRecords> tiles(grid.count());
  GBuffer& gb = out.gbuffer;

  parallel_for(grid.count(), [&](std::size_t t) {
    int x0, x1, y0, y1;
    tile_rect(grid, camera, static_cast<int>(t), x0, x1, y0, y1);
    TileRecords& rec = tiles[t];
    const auto& list = grid.lists[t];
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        rec.start.push_back(rec.hits.size());
        const Ray ray = camera.pixel_ray(x, y);
        const Vec3 view = -ray.direction;
        double T = 1.0;
        PropVector acc{};
        Vec3 n_acc = Vec3::Zero();
        double a_acc = 0.0, d_acc = 0.0;
        for (int idx : list) {
          const auto hit = ray_splat_intersect(ray, surfels[idx]);
          if (!hit) continue;
          const double a = opacity[idx] * hit->weight;
          if (a < kMinBlendAlpha) continue;
          const double w = a * T;
          BlendHit b;
          b.surfel = idx;
          b.u = hit->u;
          b.v = hit->v;
          b.depth = hit->depth;
          b.gaussian = hit->weight;
          b.opacity = opacity[idx];
          b.weight = w;
          b.transmittance = T;
          const Vec3 n = surfels[idx].frame().normal;
          b.sign = n.dot(view) < 0.0 ? -1.0 : 1.0;
          b.normal = b.sign * n;
          rec.hits.push_back(b);
          for (int c = 0; c < nprops; ++c) acc[c] += w * props[idx][c];
          n_acc += w * b.normal;
          a_acc += w;
          d_acc += w * hit->depth;
          T *= (1.0 - a);
          if (options.early_termination && T < kMinTransmittance) break;
        }
        rec.count.push_back(rec.hits.size() - rec.start.back());
        for (int c = 0; c < 3; ++c) {
          gb.diffuse.at(x, y, c) = acc[prop::kDiffuse + c];
          gb.tint.at(x, y, c) = acc[prop::kTint + c];
          gb.normal.at(x, y, c) = n_acc[c];
          if (with_extra) gb.extra.at(x, y, c) = acc[prop::kExtra + c];
        }
        for (int c = 0; c < kFeatureDim; ++c) gb.feature.at(x, y, c) = acc[prop::kFeature + c];
        gb.roughness.at(x, y, 0) = acc[prop::kRoughness];
        gb.alpha.at(x, y, 0) = a_acc;
        gb.depth.at(x, y, 0) = a_acc > 0.0 ? d_acc / a_acc : 0.0;
      }
    }
  });

  // Gather records into raster order.
  RayBlendRecords& R = out.records;
  R.width = W;
  R.height = H;
  R.offsets.assign(static_cast<std::size_t>(W) * H + 1, 0);
  std::vector<std::pair<int, std::size_t>> where(static_cast<std::size_t>(W) * H);
  std::size_t total = 0;
  for (int t = 0; t < grid.count(); ++t) {
    int x0, x1, y0, y1;
    tile_rect(grid, camera, t, x0, x1, y0, y1);
    std::size_t k = 0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x, ++k) where[static_cast<std::size_t>(y) * W + x] = {t, k};
    total += tiles[t].hits.size();
  }
  R.hits.reserve(total);
  for (std::size_t p = 0; p < where.size(); ++p) {
    const auto& [t, k] = where[p];
    const TileRecords& tr = tiles[t];
    R.offsets[p] = R.hits.size();
    R.hits.insert(R.hits.end(), tr.hits.begin() + tr.start[k], tr.hits.begin() + tr.start[k] + tr.count[k]);
  }
  R.offsets.back() = R.hits.size();
  return out;
}

RasterGrad rasterize_backward(std::span<const Surfel> surfels, const Camera& camera, const RasterOutput& fwd,
                              const GBufferGrad& grad, std::span<const Vec3> extra_color,
                              const RecordGrad* record_grad) {
  const std::size_t n = surfels.size();
  const GBuffer& gb = fwd.gbuffer;
  const RayBlendRecords& rec = fwd.records;
  const bool with_extra = gb.has_extra();
  const int nprops = with_extra ? prop::kCount : prop::kExtra;
  const int W = gb.width();
  const std::size_t npix = rec.pixel_count();

  std::vector<PropVector> props(n);
  if (with_extra && extra_color.size() != n)
    throw std::invalid_argument("rasterize_backward: extra_color must match the forward pass");
  for (std::size_t i = 0; i < n; ++i)
    props[i] = surfel_properties(surfels[i], MaterialEdit{}, with_extra ? &extra_color[i] : nullptr);

  auto channel = [](const Image& img, std::size_t p, int c) { return img.empty() ? 0.0 : img.data()[p * img.channels() + c]; };

  const std::size_t chunks = std::min(kReductionChunks, std::max<std::size_t>(npix, 1));
  struct ChunkGrad {
    std::vector<SurfelGrad> geo;
    std::vector<PropVector> props;
  };
  std::vector<ChunkGrad> partial(chunks);

  parallel_for(chunks, [&](std::size_t chunk) {
    ChunkGrad& cg = partial[chunk];
    cg.geo.assign(n, SurfelGrad{});
    cg.props.assign(n, PropVector{});
    const std::size_t p0 = npix * chunk / chunks, p1 = npix * (chunk + 1) / chunks;
    std::vector<double> g_w;
    for (std::size_t p = p0; p < p1; ++p) {
      const auto hits = rec.pixel(p);
      if (hits.empty()) continue;
      const int x = static_cast<int>(p % W), y = static_cast<int>(p / W);
      const Ray ray = camera.pixel_ray(x, y);

      PropVector g_ch{};
      for (int c = 0; c < 3; ++c) {
        g_ch[prop::kDiffuse + c] = channel(grad.diffuse, p, c);
        g_ch[prop::kTint + c] = channel(grad.tint, p, c);
        if (with_extra) g_ch[prop::kExtra + c] = channel(grad.extra, p, c);
      }
      g_ch[prop::kRoughness] = channel(grad.roughness, p, 0);
      for (int c = 0; c < kFeatureDim; ++c) g_ch[prop::kFeature + c] = channel(grad.feature, p, c);
      const Vec3 g_n(channel(grad.normal, p, 0), channel(grad.normal, p, 1), channel(grad.normal, p, 2));
      const double g_alpha = channel(grad.alpha, p, 0);
      const double A = gb.alpha.data()[p];
      const double D = gb.depth.data()[p];
      const double g_depth_map = A > 0.0 ? channel(grad.depth, p, 0) / A : 0.0;

      const std::size_t base = rec.offsets[p];
      g_w.assign(hits.size(), 0.0);
      for (std::size_t i = 0; i < hits.size(); ++i) {
        const BlendHit& h = hits[i];
        double gw = g_alpha + g_n.dot(h.normal) + g_depth_map * (h.depth - D);
        for (int c = 0; c < nprops; ++c) {
          gw += g_ch[c] * props[h.surfel][c];
          cg.props[h.surfel][c] += h.weight * g_ch[c];
        }
        if (record_grad) gw += record_grad->weight[base + i];
        g_w[i] = gw;
      }
      double S = 0.0;
      for (std::size_t ii = hits.size(); ii-- > 0;) {
        const BlendHit& h = hits[ii];
        const double a = h.opacity * h.gaussian;
        const double g_a = h.transmittance * (g_w[ii] - S);
        S = g_w[ii] * a + (1.0 - a) * S;

        SurfelGrad& sg = cg.geo[h.surfel];
        sg.raw_opacity += g_a * h.gaussian * sigmoid_grad_from_output(h.opacity);
        const double g_gauss = g_a * h.opacity;
        HitUpstream up;
        up.u = -g_gauss * h.u * h.gaussian;
        up.v = -g_gauss * h.v * h.gaussian;
        up.depth = g_depth_map * h.weight;
        Vec3 g_normal = g_n * h.weight;
        if (record_grad) {
          up.depth += record_grad->depth[base + ii];
          g_normal += record_grad->normal[base + ii];
        }
        up.normal = h.sign * g_normal;
        SplatHit sh{h.u, h.v, h.depth, h.gaussian};
        hit_backward(ray, surfels[h.surfel], sh, up, sg);
      }
    }
  });

  RasterGrad out;
  out.surfels.assign(n, SurfelGrad{});
  std::vector<PropVector> gprops(n, PropVector{});
  for (const ChunkGrad& cg : partial) {
    for (std::size_t i = 0; i < n; ++i) {
      out.surfels[i] += cg.geo[i];
      for (int c = 0; c < nprops; ++c) gprops[i][c] += cg.props[i][c];
    }
  }
  if (with_extra) out.extra_color.assign(n, Vec3::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    const Surfel& s = surfels[i];
    SurfelGrad& g = out.surfels[i];
    const Vec3 dif = s.diffuse(), tin = s.tint();
    const double sr = sigmoid(s.raw_roughness);
    for (int c = 0; c < 3; ++c) {
      g.raw_diffuse[c] += gprops[i][prop::kDiffuse + c] * sigmoid_grad_from_output(dif[c]);
      g.raw_tint[c] += gprops[i][prop::kTint + c] * sigmoid_grad_from_output(tin[c]);
      if (with_extra) out.extra_color[i][c] = gprops[i][prop::kExtra + c];
    }
    g.raw_roughness += gprops[i][prop::kRoughness] * (1.0 - kRoughnessMin) * sigmoid_grad_from_output(sr);
    for (int c = 0; c < kFeatureDim; ++c) g.feature[c] += gprops[i][prop::kFeature + c];
  }
  return out;
}

}  // namespace glossplat
