// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/sh.hpp"

namespace glossplat {

namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                          0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                          -0.4570457994644658, 1.445305721320277, -0.5900435899266435};

}  // namespace

std::array<double, kShBasisCount> sh_basis(const Vec3& d) {
  const double x = d.x(), y = d.y(), z = d.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  return {kC0,
          -kC1 * y,
          kC1 * z,
          -kC1 * x,
          kC2[0] * x * y,
          kC2[1] * y * z,
          kC2[2] * (2.0 * zz - xx - yy),
          kC2[3] * x * z,
          kC2[4] * (xx - yy),
          kC3[0] * y * (3.0 * xx - yy),
          kC3[1] * x * y * z,
          kC3[2] * y * (4.0 * zz - xx - yy),
          kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
          kC3[4] * x * (4.0 * zz - xx - yy),
          kC3[5] * z * (xx - yy),
          kC3[6] * x * (xx - 3.0 * yy)};
}

std::array<Vec3, kShBasisCount> sh_basis_gradient(const Vec3& d) {
  const double x = d.x(), y = d.y(), z = d.z();
  const double xx = x * x, yy = y * y, zz = z * z;
  return {Vec3(0, 0, 0),
          Vec3(0, -kC1, 0),
          Vec3(0, 0, kC1),
          Vec3(-kC1, 0, 0),
          kC2[0] * Vec3(y, x, 0),
          kC2[1] * Vec3(0, z, y),
          kC2[2] * Vec3(-2 * x, -2 * y, 4 * z),
          kC2[3] * Vec3(z, 0, x),
          kC2[4] * Vec3(2 * x, -2 * y, 0),
          kC3[0] * Vec3(6 * x * y, 3 * xx - 3 * yy, 0),
          kC3[1] * Vec3(y * z, x * z, x * y),
          kC3[2] * Vec3(-2 * x * y, 4 * zz - xx - 3 * yy, 8 * y * z),
          kC3[3] * Vec3(-6 * x * z, -6 * y * z, 6 * zz - 3 * xx - 3 * yy),
          kC3[4] * Vec3(4 * zz - 3 * xx - yy, -2 * x * y, 8 * x * z),
          kC3[5] * Vec3(2 * x * z, -2 * y * z, xx - yy),
          kC3[6] * Vec3(3 * xx - 3 * yy, -6 * x * y, 0)};
}

Vec3 sh_evaluate(const ShCoefficients& coeffs, const Vec3& dir) {
  const auto b = sh_basis(dir);
  Vec3 out = Vec3::Zero();
  for (int k = 0; k < kShBasisCount; ++k)
    for (int c = 0; c < 3; ++c) out[c] += b[k] * coeffs[k * 3 + c];
  return out;
}

Vec3 sh_evaluate_backward(const ShCoefficients& coeffs, const Vec3& dir, const Vec3& d_color,
                          ShCoefficients& d_coeffs) {
  const auto b = sh_basis(dir);
  const auto db = sh_basis_gradient(dir);
  Vec3 d_dir = Vec3::Zero();
  for (int k = 0; k < kShBasisCount; ++k) {
    double dot = 0.0;
    for (int c = 0; c < 3; ++c) {
      d_coeffs[k * 3 + c] += b[k] * d_color[c];
      dot += coeffs[k * 3 + c] * d_color[c];
    }
    d_dir += dot * db[k];
  }
  return d_dir;
}

}  // namespace glossplat
