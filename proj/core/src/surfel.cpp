// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/surfel.hpp"

namespace glossplat {

SurfelFrame Surfel::frame() const {
  const Mat3 r = quat_to_matrix(rotation);
  SurfelFrame f;
  f.t_u = r.col(0);
  f.t_v = r.col(1);
  f.normal = f.t_u.cross(f.t_v);
  return f;
}

double roughness_to_raw(double roughness) {
  return logit((roughness - kRoughnessMin) / (1.0 - kRoughnessMin));
}

SurfelGrad& SurfelGrad::operator+=(const SurfelGrad& o) {
  center += o.center;
  rotation += o.rotation;
  log_scales += o.log_scales;
  raw_opacity += o.raw_opacity;
  raw_diffuse += o.raw_diffuse;
  raw_roughness += o.raw_roughness;
  raw_tint += o.raw_tint;
  feature += o.feature;
  return *this;
}

std::optional<SplatHit> ray_splat_intersect(const Ray& ray, const Surfel& surfel) {
  const SurfelFrame f = surfel.frame();
  const double denom = ray.direction.dot(f.normal);
  if (std::abs(denom) < kParallelEpsilon) return std::nullopt;
  const Vec3 r = surfel.center - ray.origin;
  const double t = r.dot(f.normal) / denom;
  if (!(t > kNearEpsilon)) return std::nullopt;
  const Vec3 e = t * ray.direction - r;  // hit point minus center
  const Vec2 s = surfel.scales();
  SplatHit hit;
  hit.u = e.dot(f.t_u) / s[0];
  hit.v = e.dot(f.t_v) / s[1];
  hit.depth = t;
  hit.weight = gaussian_weight(hit.u, hit.v);
  return hit;
}

Vec3 surfel_normal(const Surfel& surfel, const Vec3& view_dir) {
  Vec3 n = surfel.frame().normal;
  if (n.dot(view_dir) < 0.0) n = -n;
  return n;
}

void frame_backward(const Vec4& rotation, const Vec3& d_tu, const Vec3& d_tv, Vec4& d_rotation) {
  const double len = rotation.norm();
  const Vec4 q = rotation / len;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  // t_u = (1-2(y^2+z^2), 2(xy+wz), 2(xz-wy)); t_v = (2(xy-wz), 1-2(x^2+z^2), 2(yz+wx))
  Vec4 g;
  g[0] = d_tu.dot(Vec3(0, 2 * z, -2 * y)) + d_tv.dot(Vec3(-2 * z, 0, 2 * x));
  g[1] = d_tu.dot(Vec3(0, 2 * y, 2 * z)) + d_tv.dot(Vec3(2 * y, -4 * x, 2 * w));
  g[2] = d_tu.dot(Vec3(-4 * y, 2 * x, -2 * w)) + d_tv.dot(Vec3(2 * x, 0, 2 * z));
  g[3] = d_tu.dot(Vec3(-4 * z, 2 * w, 2 * x)) + d_tv.dot(Vec3(-2 * w, -4 * z, 2 * y));
  d_rotation += (g - q * q.dot(g)) / len;
}

void hit_backward(const Ray& ray, const Surfel& surfel, const SplatHit& hit, const HitUpstream& up,
                  SurfelGrad& grad) {
  const SurfelFrame f = surfel.frame();
  const Vec2 s = surfel.scales();
  const Vec3& d = ray.direction;
  const double denom = d.dot(f.normal);
  const Vec3 r = surfel.center - ray.origin;
  const Vec3 e = hit.depth * d - r;

  // depth also reaches u and v through the hit point
  const double d_depth = up.depth + up.u * d.dot(f.t_u) / s[0] + up.v * d.dot(f.t_v) / s[1];

  grad.center += -up.u * f.t_u / s[0] - up.v * f.t_v / s[1] + d_depth * f.normal / denom;
  grad.log_scales += Vec2(-up.u * hit.u, -up.v * hit.v);

  Vec3 d_tu = up.u * e / s[0];
  Vec3 d_tv = up.v * e / s[1];
  const Vec3 d_n = up.normal - d_depth * e / denom;
  d_tu += f.t_v.cross(d_n);
  d_tv += d_n.cross(f.t_u);
  frame_backward(surfel.rotation, d_tu, d_tv, grad.rotation);
}

}  // namespace glossplat
