// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/camera.hpp"
#include "glossplat/image.hpp"
#include "glossplat/rasterizer.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace glossplat {

/// Learnable D x H x W x F feature grid over (roughness level, theta, phi).
class SphericalFeatureMipmap {
 public:
  SphericalFeatureMipmap() = default;
  SphericalFeatureMipmap(int levels, int height, int width, int features, double fill = 0.0);

  int levels() const { return levels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int features() const { return features_; }

  double* cell(int level, std::size_t pixel) {
    return data_.data() + (static_cast<std::size_t>(level) * height_ * width_ + pixel) * features_;
  }
  const double* cell(int level, std::size_t pixel) const {
    return data_.data() + (static_cast<std::size_t>(level) * height_ * width_ + pixel) * features_;
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Fills with uniform noise in [-scale, scale].
  void randomize(std::uint64_t seed, double scale);

  bool operator==(const SphericalFeatureMipmap&) const = default;

 private:
  int levels_ = 0, height_ = 0, width_ = 0, features_ = 0;
  std::vector<double> data_;
};

enum class Activation { kRelu, kIdentity };

/// Fully connected network: input -> hidden... -> 3, hidden activation
/// configurable (identity only for tests), linear output.
class ResidualMlp {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
    bool operator==(const Layer& o) const { return weight == o.weight && bias == o.bias; }
  };

  ResidualMlp() = default;
  /// Hidden layers get a He-uniform init from `seed`; the output layer starts at zero.
  ResidualMlp(int features, int pixel_features, std::vector<int> hidden, std::uint64_t seed,
              Activation activation = Activation::kRelu);
  /// Takes explicit layers; shapes must chain from input_dim() to 3.
  ResidualMlp(int features, int pixel_features, std::vector<Layer> layers, Activation activation = Activation::kRelu);

  int features() const { return features_; }
  int pixel_features() const { return pixel_features_; }
  int input_dim() const { return features_ + features_ * pixel_features_; }
  Activation activation() const { return activation_; }
  void set_activation(Activation a) { activation_ = a; }

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Columns are samples. Returns 3 x n; `activations` (if given) receives the
  /// input and each layer's output for backward.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, std::vector<Eigen::MatrixXd>* activations = nullptr) const;

  /// Accumulates parameter gradients into `grad` and returns d(input).
  Eigen::MatrixXd backward(const std::vector<Eigen::MatrixXd>& activations, const Eigen::MatrixXd& d_output,
                           std::vector<Layer>& grad) const;

  std::vector<Layer> zero_grad() const;

  bool operator==(const ResidualMlp& o) const {
    return features_ == o.features_ && pixel_features_ == o.pixel_features_ && activation_ == o.activation_ &&
           layers_ == o.layers_;
  }

 private:
  int features_ = 0;
  int pixel_features_ = 0;
  Activation activation_ = Activation::kRelu;
  std::vector<Layer> layers_;
};

struct Spherical {
  double theta = 0.0;
  double phi = 0.0;
};

/// theta = acos(z) in [0, pi], phi = atan2(y, x) in (-pi, pi].
Spherical dir_to_spherical(const Vec3& dir);

/// Trilinear lookup: bilinear on the latitude-longitude grid (phi wraps, theta
/// clamps) at the two levels around roughness * (D - 1).
Eigen::VectorXd sph_mip_encode(const Vec3& dir, double roughness, const SphericalFeatureMipmap& mip);

struct EncodeGrad {
  Vec3 dir = Vec3::Zero();
  double roughness = 0.0;
};

EncodeGrad sph_mip_encode_backward(const Vec3& dir, double roughness, const SphericalFeatureMipmap& mip,
                                   const Eigen::VectorXd& d_h, SphericalFeatureMipmap* d_mip);

/// MLP input: [h, k (x) h] with the outer product flattened k-major
/// (entry j * F + i holds k_j * h_i).
Eigen::VectorXd residual_input(const Eigen::VectorXd& h, const Eigen::VectorXd& k);

Vec3 residual_color(const Eigen::VectorXd& h, const Eigen::VectorXd& k, const ResidualMlp& mlp);

struct ResidualOutput {
  Image image;                          // I_r, 3 channels
  std::vector<std::size_t> pixels;      // covered pixels, column order of the batch
  std::vector<Vec3> reflected;          // per covered pixel
  std::vector<Eigen::VectorXd> encoding;  // h per covered pixel
  std::vector<Eigen::MatrixXd> activations;
};

ResidualOutput render_residual_image(const GBuffer& gbuffer, const Camera& camera,
                                     const SphericalFeatureMipmap& mip, const ResidualMlp& mlp);

struct ResidualGrad {
  SphericalFeatureMipmap mip;
  std::vector<ResidualMlp::Layer> mlp;
};

ResidualGrad zero_residual_grad(const SphericalFeatureMipmap& mip, const ResidualMlp& mlp);

/// Reverse pass; adds into gbuffer_grad (feature, normal, roughness, alpha) and `grad`.
void render_residual_backward(const GBuffer& gbuffer, const Camera& camera, const SphericalFeatureMipmap& mip,
                              const ResidualMlp& mlp, const ResidualOutput& forward, const Image& d_image,
                              GBufferGrad& gbuffer_grad, ResidualGrad& grad);

}  // namespace glossplat
