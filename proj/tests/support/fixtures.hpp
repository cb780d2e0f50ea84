// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/camera.hpp"
#include "glossplat/cubemap.hpp"
#include "glossplat/math.hpp"
#include "glossplat/surfel.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace glossplat::testing {

inline Surfel make_surfel(const Vec3& center, const Vec4& rotation, double su, double sv, double opacity) {
  Surfel s;
  s.center = center;
  s.rotation = rotation.normalized();
  s.log_scales = Vec2(std::log(su), std::log(sv));
  s.raw_opacity = logit(opacity);
  return s;
}

inline Vec4 random_quat(Rng& rng) {
  return Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
}

/// Small random scene in front of a camera at the origin looking down +z.
inline std::vector<Surfel> random_surfels(int n, std::uint64_t seed, bool random_materials = true) {
  Rng rng(seed);
  std::vector<Surfel> out;
  for (int i = 0; i < n; ++i) {
    Surfel s;
    s.center = Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(2.5, 4.0));
    Vec4 q = random_quat(rng);
    // keep disks roughly facing the camera so they cover pixels
    q = (Vec4(1, 0, 0, 0) + 0.35 * q).normalized();
    s.rotation = q;
    s.log_scales = Vec2(std::log(rng.uniform(0.25, 0.6)), std::log(rng.uniform(0.25, 0.6)));
    s.raw_opacity = rng.uniform(-0.5, 2.0);
    if (random_materials) {
      s.raw_diffuse = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      s.raw_roughness = rng.uniform(-1.5, 1.5);
      s.raw_tint = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      s.feature = Vec4(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    }
    out.push_back(s);
  }
  return out;
}

inline Camera front_camera(int w, int h, double fov_x = 0.6) {
  return Camera(intrinsics_from_fov(w, h, fov_x), Mat3::Identity(), Vec3::Zero());
}

/// Smooth positive environment with a few bright lobes.
inline CubeImage smooth_env(int size, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<Vec3> lobes;
  std::vector<Vec3> colors;
  for (int k = 0; k < 4; ++k) {
    lobes.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
    colors.push_back(Vec3(rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)));
  }
  CubeImage env(size);
  for (int f = 0; f < 6; ++f)
    for (int j = 0; j < size; ++j)
      for (int i = 0; i < size; ++i) {
        const Vec3 d = texel_direction(f, i, j, size);
        Vec3 c = Vec3::Constant(0.1) + 0.1 * Vec3(0.5 + 0.5 * d.x(), 0.5 + 0.5 * d.y(), 0.5 + 0.5 * d.z());
        for (int k = 0; k < 4; ++k) c += colors[k] * std::pow(std::max(0.0, d.dot(lobes[k])), 4.0);
        double* t = env.texel(env.texel_index(f, i, j));
        for (int ch = 0; ch < 3; ++ch) t[ch] = c[ch];
      }
  return env;
}

/// Central difference of f at x along one scalar.
inline double central_difference(double& x, const std::function<double()>& f, double h = 1e-6) {
  const double x0 = x;
  x = x0 + h;
  const double fp = f();
  x = x0 - h;
  const double fm = f();
  x = x0;
  return (fp - fm) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  const double den = std::abs(a) + std::abs(b);
  return den < 1e-8 ? 0.0 : std::abs(a - b) / den;
}

}  // namespace glossplat::testing
