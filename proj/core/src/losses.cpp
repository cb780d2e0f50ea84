// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace glossplat {

void LossWeights::validate() const {
  if (!(ssim_mix >= 0.0 && ssim_mix <= 1.0) || !(normal >= 0.0) || !(distortion >= 0.0) || !(alpha >= 0.0))
    throw std::invalid_argument("LossWeights: weights must be non-negative (ssim_mix in [0, 1])");
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_kernel() {
  std::array<double, kWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

/// Separable zero-padded "same" Gaussian filter of one plane (W x H).
std::vector<double> blur(const std::vector<double>& in, int W, int H) {
  static const auto k = gaussian_kernel();
  constexpr int r = kWindow / 2;
  std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < W) s += k[i + r] * in[static_cast<std::size_t>(y) * W + xx];
      }
      tmp[static_cast<std::size_t>(y) * W + x] = s;
    }
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < H) s += k[i + r] * tmp[static_cast<std::size_t>(yy) * W + x];
      }
      out[static_cast<std::size_t>(y) * W + x] = s;
    }
  return out;
}

void require_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": image shapes differ");
}

}  // namespace

double ssim(const Image& a, const Image& b, Image* grad_a) {
  require_same(a, b, "ssim");
  const int W = a.width(), H = a.height(), C = a.channels();
  const std::size_t N = a.pixel_count();
  if (N == 0 || C == 0) throw std::invalid_argument("ssim: empty image");
  const double inv_count = 1.0 / static_cast<double>(N * C);
  if (grad_a) *grad_a = Image(W, H, C);
  double total = 0.0;
  std::vector<double> x(N), y(N), xx(N), yy(N), xy(N);
  for (int c = 0; c < C; ++c) {
    for (std::size_t p = 0; p < N; ++p) {
      x[p] = a.data()[p * C + c];
      y[p] = b.data()[p * C + c];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = blur(x, W, H), my = blur(y, W, H);
    const auto exx = blur(xx, W, H), eyy = blur(yy, W, H), exy = blur(xy, W, H);
    std::vector<double> g_m, g_xx, g_xy;
    if (grad_a) {
      g_m.resize(N);
      g_xx.resize(N);
      g_xy.resize(N);
    }
    double plane = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
      const double sxx = exx[p] - mx[p] * mx[p];
      const double syy = eyy[p] - my[p] * my[p];
      const double sxy = exy[p] - mx[p] * my[p];
      const double a1 = 2.0 * mx[p] * my[p] + kC1, a2 = 2.0 * sxy + kC2;
      const double b1 = mx[p] * mx[p] + my[p] * my[p] + kC1, b2 = sxx + syy + kC2;
      const double s = a1 * a2 / (b1 * b2);
      plane += s;
      if (grad_a) {
        const double m = mx[p];
        g_m[p] = inv_count * ((2.0 * my[p] * a2 - 2.0 * my[p] * a1) / (b1 * b2) - s * (2.0 * m / b1 - 2.0 * m / b2));
        g_xx[p] = inv_count * (-s / b2);
        g_xy[p] = inv_count * (2.0 * a1 / (b1 * b2));
      }
    }
    total += plane;
    if (grad_a) {
      const auto bm = blur(g_m, W, H), bxx = blur(g_xx, W, H), bxy = blur(g_xy, W, H);
      for (std::size_t p = 0; p < N; ++p)
        grad_a->data()[p * C + c] = bm[p] + 2.0 * x[p] * bxx[p] + y[p] * bxy[p];
    }
  }
  return total * inv_count;
}

PhotometricLoss photometric_loss(const Image& image, const Image& target, double mix, Image* grad) {
  require_same(image, target, "photometric_loss");
  if (!(mix >= 0.0 && mix <= 1.0)) throw std::invalid_argument("photometric_loss: mix must be in [0, 1]");
  Image a = image, b = target;
  for (double& v : a.data()) v = clamp01(v);
  for (double& v : b.data()) v = clamp01(v);
  const std::size_t n = a.size();
  PhotometricLoss out;
  for (std::size_t i = 0; i < n; ++i) out.l1 += std::abs(a.data()[i] - b.data()[i]);
  out.l1 /= static_cast<double>(n);
  Image g_ssim;
  const double s = ssim(a, b, grad && mix > 0.0 ? &g_ssim : nullptr);
  out.dssim = 0.5 * (1.0 - s);
  out.value = (1.0 - mix) * out.l1 + mix * out.dssim;
  if (grad) {
    *grad = Image(image.width(), image.height(), image.channels());
    for (std::size_t i = 0; i < n; ++i) {
      const double v = image.data()[i];
      if (v < 0.0 || v > 1.0) continue;
      const double d = a.data()[i] - b.data()[i];
      double g = (1.0 - mix) * (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) / static_cast<double>(n);
      if (mix > 0.0) g -= 0.5 * mix * g_ssim.data()[i];
      grad->data()[i] = g;
    }
  }
  return out;
}

double normal_consistency_loss(const RayBlendRecords& records, const Image& N, RecordGrad* rg, Image* dN,
                               double scale) {
  if (N.width() != records.width || N.height() != records.height || N.channels() != 3)
    throw std::invalid_argument("normal_consistency_loss: normal map does not match records");
  std::size_t valid = 0;
  for (std::size_t p = 0; p < records.pixel_count(); ++p) {
    const auto n = N.pixel(p);
    if (n[0] != 0.0 || n[1] != 0.0 || n[2] != 0.0) ++valid;
  }
  if (valid == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(valid);
  double total = 0.0;
  for (std::size_t p = 0; p < records.pixel_count(); ++p) {
    const auto np = N.pixel(p);
    const Vec3 nd(np[0], np[1], np[2]);
    if (nd.isZero(0.0)) continue;
    const std::size_t base = records.offsets[p];
    const auto hits = records.pixel(p);
    double sum = 0.0;
    Vec3 g_nd = Vec3::Zero();
    for (std::size_t i = 0; i < hits.size(); ++i) {
      const BlendHit& h = hits[i];
      const double cosv = h.normal.dot(nd);
      sum += h.weight * (1.0 - cosv);
      if (rg) {
        rg->weight[base + i] += scale * inv * (1.0 - cosv);
        rg->normal[base + i] -= scale * inv * h.weight * nd;
      }
      g_nd -= h.weight * h.normal;
    }
    total += sum;
    if (dN)
      for (int c = 0; c < 3; ++c) dN->data()[p * 3 + c] += scale * inv * g_nd[c];
  }
  return total * inv;
}

double depth_distortion_loss(const RayBlendRecords& records, RecordGrad* rg, double scale) {
  std::size_t rays = 0;
  for (std::size_t p = 0; p < records.pixel_count(); ++p)
    if (records.offsets[p + 1] > records.offsets[p]) ++rays;
  if (rays == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(rays);
  double total = 0.0;
  for (std::size_t p = 0; p < records.pixel_count(); ++p) {
    const auto hits = records.pixel(p);
    const std::size_t base = records.offsets[p];
    double sum = 0.0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      double gw = 0.0, gz = 0.0;
      for (std::size_t j = 0; j < hits.size(); ++j) {
        if (i == j) continue;
        const double dz = hits[i].depth - hits[j].depth;
        sum += hits[i].weight * hits[j].weight * std::abs(dz);
        gw += 2.0 * hits[j].weight * std::abs(dz);
        gz += 2.0 * hits[i].weight * hits[j].weight * (dz > 0.0 ? 1.0 : dz < 0.0 ? -1.0 : 0.0);
      }
      if (rg) {
        rg->weight[base + i] += scale * inv * gw;
        rg->depth[base + i] += scale * inv * gz;
      }
    }
    total += sum;
  }
  return total * inv;
}

double alpha_loss(const Image& alpha, const Image& target, Image* grad, double scale) {
  require_same(alpha, target, "alpha_loss");
  const std::size_t n = alpha.size();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = alpha.data()[i] - target.data()[i];
    total += std::abs(d);
    if (grad) grad->data()[i] += scale * (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) / static_cast<double>(n);
  }
  return total / static_cast<double>(n);
}

double total_loss(const LossParts& parts, const LossWeights& w) {
  w.validate();
  for (double v : {parts.color, parts.distortion, parts.normal, parts.alpha})
    if (!std::isfinite(v)) throw std::invalid_argument("total_loss: non-finite loss term");
  return parts.color + w.distortion * parts.distortion + w.normal * parts.normal + w.alpha * parts.alpha;
}

double bounding_volume_roughness_penalty(std::span<const Surfel> surfels, const Aabb& box,
                                         std::vector<SurfelGrad>* grad, double scale, double target) {
  std::size_t outside = 0;
  for (const Surfel& s : surfels)
    if (!box.contains(s.center)) ++outside;
  if (outside == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(outside);
  double total = 0.0;
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    const Surfel& s = surfels[i];
    if (box.contains(s.center)) continue;
    const double rho = s.roughness();
    if (rho >= target) continue;
    total += target - rho;
    if (grad) {
      const double sg = sigmoid(s.raw_roughness);
      (*grad)[i].raw_roughness -= scale * inv * (1.0 - kRoughnessMin) * sg * (1.0 - sg);
    }
  }
  return total * inv;
}

Image composite(const Image& rgb, const Image& alpha, const Vec3& bg) {
  if (rgb.channels() != 3 || alpha.channels() != 1 || rgb.width() != alpha.width() || rgb.height() != alpha.height())
    throw std::invalid_argument("composite: expected RGB and matching alpha");
  Image out = rgb;
  for (std::size_t p = 0; p < alpha.pixel_count(); ++p) {
    const double t = 1.0 - alpha.data()[p];
    for (int c = 0; c < 3; ++c) out.data()[p * 3 + c] += t * bg[c];
  }
  return out;
}

}  // namespace glossplat
