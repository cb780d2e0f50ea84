// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/residual.hpp"

#include "glossplat/cubemap.hpp"
#include "glossplat/envlight.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace glossplat {

SphericalFeatureMipmap::SphericalFeatureMipmap(int levels, int height, int width, int features, double fill)
    : levels_(levels), height_(height), width_(width), features_(features),
      data_(static_cast<std::size_t>(levels) * height * width * features, fill) {
  if (levels < 2) throw std::invalid_argument("SphericalFeatureMipmap: need at least 2 levels");
  if (height < 1 || width < 1 || features < 1) throw std::invalid_argument("SphericalFeatureMipmap: empty grid");
}

void SphericalFeatureMipmap::randomize(std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (double& v : data_) v = rng.uniform(-scale, scale);
}

ResidualMlp::ResidualMlp(int features, int pixel_features, std::vector<int> hidden, std::uint64_t seed,
                         Activation activation)
    : features_(features), pixel_features_(pixel_features), activation_(activation) {
  Rng rng(seed);
  int in = input_dim();
  for (int width : hidden) {
    Layer l{Eigen::MatrixXd(width, in), Eigen::VectorXd::Zero(width)};
    const double bound = std::sqrt(6.0 / in);
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = rng.uniform(-bound, bound);
    layers_.push_back(std::move(l));
    in = width;
  }
  layers_.push_back({Eigen::MatrixXd::Zero(3, in), Eigen::VectorXd::Zero(3)});
}

ResidualMlp::ResidualMlp(int features, int pixel_features, std::vector<Layer> layers, Activation activation)
    : features_(features), pixel_features_(pixel_features), activation_(activation), layers_(std::move(layers)) {
  Eigen::Index in = input_dim();
  for (const auto& l : layers_) {
    if (l.weight.cols() != in || l.bias.size() != l.weight.rows())
      throw std::invalid_argument("ResidualMlp: layer shapes do not chain");
    in = l.weight.rows();
  }
  if (layers_.empty() || in != 3) throw std::invalid_argument("ResidualMlp: output must have 3 channels");
}

Eigen::MatrixXd ResidualMlp::forward(const Eigen::MatrixXd& input, std::vector<Eigen::MatrixXd>* acts) const {
  if (input.rows() != input_dim()) throw std::invalid_argument("ResidualMlp: input dimension mismatch");
  Eigen::MatrixXd x = input;
  if (acts) {
    acts->clear();
    acts->push_back(x);
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd y = layers_[i].weight * x;
    y.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size() && activation_ == Activation::kRelu) y = y.cwiseMax(0.0);
    if (acts) acts->push_back(y);
    x = std::move(y);
  }
  return x;
}

Eigen::MatrixXd ResidualMlp::backward(const std::vector<Eigen::MatrixXd>& acts, const Eigen::MatrixXd& d_output,
                                      std::vector<Layer>& grad) const {
  Eigen::MatrixXd g = d_output;
  for (std::size_t ii = layers_.size(); ii-- > 0;) {
    if (ii + 1 < layers_.size() && activation_ == Activation::kRelu)
      g = g.cwiseProduct((acts[ii + 1].array() > 0.0).cast<double>().matrix());
    grad[ii].weight.noalias() += g * acts[ii].transpose();
    grad[ii].bias += g.rowwise().sum();
    g = layers_[ii].weight.transpose() * g;
  }
  return g;
}

std::vector<ResidualMlp::Layer> ResidualMlp::zero_grad() const {
  std::vector<Layer> g;
  for (const auto& l : layers_)
    g.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  return g;
}

Spherical dir_to_spherical(const Vec3& d) {
  return {std::acos(std::clamp(d.z(), -1.0, 1.0)), std::atan2(d.y(), d.x())};
}

namespace {

struct MipBlend {
  int lo = 0;
  double frac = 0.0;
  double dfrac = 0.0;
};

MipBlend mip_blend(int levels, double roughness) {
  MipBlend b;
  const double scale = levels - 1;
  double lambda = roughness * scale;
  b.dfrac = scale;
  if (lambda <= 0.0) {
    lambda = 0.0;
    b.dfrac = 0.0;
  } else if (lambda >= scale) {
    lambda = scale;
    b.dfrac = 0.0;
  }
  b.lo = std::min(static_cast<int>(std::floor(lambda)), levels - 2);
  b.frac = lambda - b.lo;
  return b;
}

}  // namespace

Eigen::VectorXd sph_mip_encode(const Vec3& dir, double roughness, const SphericalFeatureMipmap& mip) {
  const Spherical s = dir_to_spherical(dir);
  const EquirectTaps t = equirect_taps(mip.height(), mip.width(), s.theta, s.phi);
  const MipBlend b = mip_blend(mip.levels(), roughness);
  const int F = mip.features();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(F);
  for (int side = 0; side < 2; ++side) {
    const double wl = side == 0 ? 1.0 - b.frac : b.frac;
    if (wl == 0.0) continue;
    for (int k = 0; k < 4; ++k) {
      const double* c = mip.cell(b.lo + side, t.pixel[k]);
      const double w = wl * t.weight[k];
      for (int f = 0; f < F; ++f) h[f] += w * c[f];
    }
  }
  return h;
}

EncodeGrad sph_mip_encode_backward(const Vec3& dir, double roughness, const SphericalFeatureMipmap& mip,
                                   const Eigen::VectorXd& d_h, SphericalFeatureMipmap* d_mip) {
  const Spherical s = dir_to_spherical(dir);
  const EquirectTaps t = equirect_taps(mip.height(), mip.width(), s.theta, s.phi);
  const MipBlend b = mip_blend(mip.levels(), roughness);
  const int F = mip.features();
  double g_theta = 0.0, g_phi = 0.0;
  EncodeGrad out;
  for (int side = 0; side < 2; ++side) {
    const double wl = side == 0 ? 1.0 - b.frac : b.frac;
    const double dwl = side == 0 ? -b.dfrac : b.dfrac;
    for (int k = 0; k < 4; ++k) {
      const double* c = mip.cell(b.lo + side, t.pixel[k]);
      double dot = 0.0;
      for (int f = 0; f < F; ++f) dot += d_h[f] * c[f];
      g_theta += wl * t.dw_dtheta[k] * dot;
      g_phi += wl * t.dw_dphi[k] * dot;
      out.roughness += dwl * t.weight[k] * dot;
      if (d_mip && wl != 0.0) {
        double* g = d_mip->cell(b.lo + side, t.pixel[k]);
        const double w = wl * t.weight[k];
        for (int f = 0; f < F; ++f) g[f] += w * d_h[f];
      }
    }
  }
  const double x = dir.x(), y = dir.y(), z = dir.z();
  const double rxy2 = x * x + y * y;
  if (rxy2 > 0.0) {
    out.dir.x() = g_phi * (-y / rxy2);
    out.dir.y() = g_phi * (x / rxy2);
  }
  if (std::abs(z) < 1.0) out.dir.z() = -g_theta / std::sqrt(1.0 - z * z);
  return out;
}

Eigen::VectorXd residual_input(const Eigen::VectorXd& h, const Eigen::VectorXd& k) {
  const Eigen::Index F = h.size(), K = k.size();
  Eigen::VectorXd in(F + F * K);
  in.head(F) = h;
  for (Eigen::Index j = 0; j < K; ++j) in.segment(F + j * F, F) = k[j] * h;
  return in;
}

Vec3 residual_color(const Eigen::VectorXd& h, const Eigen::VectorXd& k, const ResidualMlp& mlp) {
  if (h.size() != mlp.features() || k.size() != mlp.pixel_features())
    throw std::invalid_argument("residual_color: dimension mismatch");
  const Eigen::MatrixXd out = mlp.forward(residual_input(h, k));
  return {out(0, 0), out(1, 0), out(2, 0)};
}

namespace {

Eigen::VectorXd pixel_feature(const GBuffer& gb, std::size_t p) {
  const auto f = gb.feature.pixel(p);
  return Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
}

Vec3 pixel_vec3(const Image& img, std::size_t p) {
  const auto v = img.pixel(p);
  return {v[0], v[1], v[2]};
}

}  // namespace

ResidualOutput render_residual_image(const GBuffer& gb, const Camera& camera, const SphericalFeatureMipmap& mip,
                                     const ResidualMlp& mlp) {
  if (mlp.features() != mip.features() || mlp.pixel_features() != gb.feature.channels())
    throw std::invalid_argument("render_residual_image: feature dimensions do not match");
  const int W = gb.width(), H = gb.height();
  ResidualOutput out;
  out.image = Image(W, H, 3);
  for (std::size_t p = 0; p < gb.alpha.pixel_count(); ++p) {
    if (!(gb.alpha.data()[p] > 0.0)) continue;
    const Vec3 n = pixel_vec3(gb.normal, p);
    if (n.norm() == 0.0) continue;
    out.pixels.push_back(p);
  }
  const Eigen::Index count = static_cast<Eigen::Index>(out.pixels.size());
  if (count == 0) return out;

  Eigen::MatrixXd input(mlp.input_dim(), count);
  out.reflected.resize(count);
  out.encoding.resize(count);
  for (Eigen::Index c = 0; c < count; ++c) {
    const std::size_t p = out.pixels[c];
    const int x = static_cast<int>(p % W), y = static_cast<int>(p / W);
    const Vec3 n = pixel_vec3(gb.normal, p);
    const Vec3 refl = reflect_dir(-camera.pixel_ray(x, y).direction, n / n.norm());
    out.reflected[c] = refl;
    out.encoding[c] = sph_mip_encode(refl, gb.roughness.data()[p], mip);
    input.col(c) = residual_input(out.encoding[c], pixel_feature(gb, p));
  }
  const Eigen::MatrixXd color = mlp.forward(input, &out.activations);
  for (Eigen::Index c = 0; c < count; ++c) {
    const std::size_t p = out.pixels[c];
    const double a = gb.alpha.data()[p];
    for (int k = 0; k < 3; ++k) out.image.data()[p * 3 + k] = a * color(k, c);
  }
  return out;
}

ResidualGrad zero_residual_grad(const SphericalFeatureMipmap& mip, const ResidualMlp& mlp) {
  return {SphericalFeatureMipmap(mip.levels(), mip.height(), mip.width(), mip.features()), mlp.zero_grad()};
}

void render_residual_backward(const GBuffer& gb, const Camera& camera, const SphericalFeatureMipmap& mip,
                              const ResidualMlp& mlp, const ResidualOutput& fwd, const Image& d_image,
                              GBufferGrad& gg, ResidualGrad& grad) {
  const Eigen::Index count = static_cast<Eigen::Index>(fwd.pixels.size());
  if (count == 0) return;
  const int W = gb.width();
  const int F = mip.features();
  const int K = mlp.pixel_features();
  const Eigen::MatrixXd& color = fwd.activations.back();

  Eigen::MatrixXd d_color(3, count);
  for (Eigen::Index c = 0; c < count; ++c) {
    const std::size_t p = fwd.pixels[c];
    const double a = gb.alpha.data()[p];
    double g_a = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double g = d_image.data()[p * 3 + k];
      d_color(k, c) = a * g;
      g_a += g * color(k, c);
    }
    gg.alpha.data()[p] += g_a;
  }
  const Eigen::MatrixXd d_input = mlp.backward(fwd.activations, d_color, grad.mlp);

  for (Eigen::Index c = 0; c < count; ++c) {
    const std::size_t p = fwd.pixels[c];
    const Eigen::VectorXd& h = fwd.encoding[c];
    const Eigen::VectorXd k = pixel_feature(gb, p);
    Eigen::VectorXd g_h = d_input.col(c).head(F);
    for (int j = 0; j < K; ++j) {
      const auto block = d_input.col(c).segment(F + j * F, F);
      gg.feature.data()[p * K + j] += block.dot(h);
      g_h += k[j] * block;
    }
    const EncodeGrad eg = sph_mip_encode_backward(fwd.reflected[c], gb.roughness.data()[p], mip, g_h, &grad.mip);
    gg.roughness.data()[p] += eg.roughness;

    const int x = static_cast<int>(p % W), y = static_cast<int>(p / W);
    const Vec3 n = pixel_vec3(gb.normal, p);
    const double len = n.norm();
    const Vec3 nh = n / len;
    const Vec3 view = -camera.pixel_ray(x, y).direction;
    const Vec3 g_nh = 2.0 * (view.dot(nh) * eg.dir + eg.dir.dot(nh) * view);
    const Vec3 g_n = (g_nh - nh * nh.dot(g_nh)) / len;
    for (int q = 0; q < 3; ++q) gg.normal.data()[p * 3 + q] += g_n[q];
  }
}

}  // namespace glossplat
