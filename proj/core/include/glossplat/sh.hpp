// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/math.hpp"

#include <array>

namespace glossplat {

inline constexpr int kShBasisCount = 16;

/// Real spherical harmonics up to degree 3 (3D Gaussian Splatting ordering).
using ShCoefficients = std::array<double, kShBasisCount * 3>;  // [basis][channel]

std::array<double, kShBasisCount> sh_basis(const Vec3& dir);

/// d(basis_k)/d(dir), row k.
std::array<Vec3, kShBasisCount> sh_basis_gradient(const Vec3& dir);

Vec3 sh_evaluate(const ShCoefficients& coeffs, const Vec3& dir);

/// Adds d/d(coeffs) into `d_coeffs` and returns d/d(dir).
Vec3 sh_evaluate_backward(const ShCoefficients& coeffs, const Vec3& dir, const Vec3& d_color,
                          ShCoefficients& d_coeffs);

}  // namespace glossplat
