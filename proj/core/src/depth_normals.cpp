// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/rasterizer.hpp"

namespace glossplat {

namespace {

bool valid_pixel(const Image& alpha, int x, int y) {
  const int W = alpha.width(), H = alpha.height();
  if (x < 1 || y < 1 || x > W - 2 || y > H - 2) return false;
  return alpha.at(x, y, 0) >= 0.5 && alpha.at(x - 1, y, 0) >= 0.5 && alpha.at(x + 1, y, 0) >= 0.5 &&
         alpha.at(x, y - 1, 0) >= 0.5 && alpha.at(x, y + 1, 0) >= 0.5;
}

Vec3 point(const Image& depth, const Camera& cam, int x, int y) {
  const Ray r = cam.pixel_ray(x, y);
  return r.origin + depth.at(x, y, 0) * r.direction;
}

}  // namespace

Image depth_to_normals(const Image& depth, const Image& alpha, const Camera& camera) {
  const int W = depth.width(), H = depth.height();
  Image out(W, H, 3);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!valid_pixel(alpha, x, y)) continue;
      const Vec3 dx = 0.5 * (point(depth, camera, x + 1, y) - point(depth, camera, x - 1, y));
      const Vec3 dy = 0.5 * (point(depth, camera, x, y + 1) - point(depth, camera, x, y - 1));
      const Vec3 c = dx.cross(dy);
      const double len = c.norm();
      if (len == 0.0) continue;
      Vec3 n = c / len;
      if (n.dot(camera.pixel_ray(x, y).direction) > 0.0) n = -n;
      for (int k = 0; k < 3; ++k) out.at(x, y, k) = n[k];
    }
  }
  return out;
}

void depth_to_normals_backward(const Image& depth, const Image& alpha, const Camera& camera, const Image& d_normals,
                               Image& d_depth) {
  const int W = depth.width(), H = depth.height();
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!valid_pixel(alpha, x, y)) continue;
      const Vec3 g(d_normals.at(x, y, 0), d_normals.at(x, y, 1), d_normals.at(x, y, 2));
      if (g.isZero(0.0)) continue;
      const Ray rxp = camera.pixel_ray(x + 1, y), rxm = camera.pixel_ray(x - 1, y);
      const Ray ryp = camera.pixel_ray(x, y + 1), rym = camera.pixel_ray(x, y - 1);
      const Vec3 dx = 0.5 * ((rxp.origin + depth.at(x + 1, y, 0) * rxp.direction) -
                             (rxm.origin + depth.at(x - 1, y, 0) * rxm.direction));
      const Vec3 dy = 0.5 * ((ryp.origin + depth.at(x, y + 1, 0) * ryp.direction) -
                             (rym.origin + depth.at(x, y - 1, 0) * rym.direction));
      const Vec3 c = dx.cross(dy);
      const double len = c.norm();
      if (len == 0.0) continue;
      const Vec3 chat = c / len;
      const double sign = chat.dot(camera.pixel_ray(x, y).direction) > 0.0 ? -1.0 : 1.0;
      const Vec3 gc = sign * (g - chat * chat.dot(g)) / len;
      const Vec3 gdx = dy.cross(gc);
      const Vec3 gdy = gc.cross(dx);
      d_depth.at(x + 1, y, 0) += 0.5 * gdx.dot(rxp.direction);
      d_depth.at(x - 1, y, 0) -= 0.5 * gdx.dot(rxm.direction);
      d_depth.at(x, y + 1, 0) += 0.5 * gdy.dot(ryp.direction);
      d_depth.at(x, y - 1, 0) -= 0.5 * gdy.dot(rym.direction);
    }
  }
}

}  // namespace glossplat
