// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/cubemap.hpp"

#include <algorithm>
#include <stdexcept>

namespace glossplat {

namespace {

struct FaceBasis {
  Vec3 ma, u, v;
};

// OpenGL cube map face orientation.
const std::array<FaceBasis, 6>& face_bases() {
  static const std::array<FaceBasis, 6> bases = {{
      {Vec3(1, 0, 0), Vec3(0, 0, -1), Vec3(0, -1, 0)},
      {Vec3(-1, 0, 0), Vec3(0, 0, 1), Vec3(0, -1, 0)},
      {Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(0, 0, 1)},
      {Vec3(0, -1, 0), Vec3(1, 0, 0), Vec3(0, 0, -1)},
      {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, -1, 0)},
      {Vec3(0, 0, -1), Vec3(-1, 0, 0), Vec3(0, -1, 0)},
  }};
  return bases;
}

// One axis of the symmetric bilinear split. `c` is the face coordinate scaled
// to texel units with texel centers at k + 0.5 - size/2.
struct AxisTaps {
  int lo, hi;
  double w_lo, w_hi;
};

AxisTaps axis_taps(double c, int size) {
  const double q0 = std::floor(c + 0.5) - 0.5;  // lower texel center
  AxisTaps t;
  t.w_hi = c - q0;
  t.w_lo = (q0 + 1.0) - c;
  const int k0 = static_cast<int>(std::lround(q0 + 0.5 * size - 0.5));
  t.lo = std::clamp(k0, 0, size - 1);
  t.hi = std::clamp(k0 + 1, 0, size - 1);
  return t;
}

}  // namespace

FaceCoord dir_to_face(const Vec3& d) {
  const double ax = std::abs(d.x()), ay = std::abs(d.y()), az = std::abs(d.z());
  FaceCoord fc;
  if (ax >= ay && ax >= az) {
    fc.face = d.x() >= 0 ? 0 : 1;
  } else if (ay >= az) {
    fc.face = d.y() >= 0 ? 2 : 3;
  } else {
    fc.face = d.z() >= 0 ? 4 : 5;
  }
  const FaceBasis& fb = face_bases()[fc.face];
  const double ma = d.dot(fb.ma);
  fc.a = d.dot(fb.u) / ma;
  fc.b = d.dot(fb.v) / ma;
  return fc;
}

Vec3 face_to_dir(int face, double a, double b) {
  const FaceBasis& fb = face_bases()[face];
  return fb.ma + a * fb.u + b * fb.v;
}

Vec3 texel_direction(int face, int i, int j, int size) {
  const double a = (2.0 * i + 1.0 - size) / size;
  const double b = (2.0 * j + 1.0 - size) / size;
  return face_to_dir(face, a, b).normalized();
}

CubeTaps cube_taps(const FaceCoord& fc, int size) {
  const double half = 0.5 * size;
  const AxisTaps tu = axis_taps(fc.a * half, size);
  const AxisTaps tv = axis_taps(fc.b * half, size);
  const std::size_t base = static_cast<std::size_t>(fc.face) * size * size;
  auto idx = [&](int i, int j) { return base + static_cast<std::size_t>(j) * size + i; };
  CubeTaps t;
  t.texel = {idx(tu.lo, tv.lo), idx(tu.hi, tv.hi), idx(tu.hi, tv.lo), idx(tu.lo, tv.hi)};
  t.weight = {tu.w_lo * tv.w_lo, tu.w_hi * tv.w_hi, tu.w_hi * tv.w_lo, tu.w_lo * tv.w_hi};
  t.dw_da = {-half * tv.w_lo, half * tv.w_hi, half * tv.w_lo, -half * tv.w_hi};
  t.dw_db = {-half * tu.w_lo, half * tu.w_hi, -half * tu.w_hi, half * tu.w_lo};
  return t;
}

Vec3 sample_cube(const CubeImage& cube, const Vec3& dir) {
  const CubeTaps t = cube_taps(dir_to_face(dir), cube.size());
  Vec3 out;
  for (int c = 0; c < 3; ++c) {
    out[c] = (t.weight[0] * cube.texel(t.texel[0])[c] + t.weight[1] * cube.texel(t.texel[1])[c]) +
             (t.weight[2] * cube.texel(t.texel[2])[c] + t.weight[3] * cube.texel(t.texel[3])[c]);
  }
  return out;
}

Vec3 sample_cube_backward(const CubeImage& cube, const Vec3& dir, const Vec3& d_out, CubeImage* d_cube) {
  const FaceCoord fc = dir_to_face(dir);
  const CubeTaps t = cube_taps(fc, cube.size());
  double g_a = 0.0, g_b = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double* tex = cube.texel(t.texel[k]);
    const double dot = d_out[0] * tex[0] + d_out[1] * tex[1] + d_out[2] * tex[2];
    g_a += t.dw_da[k] * dot;
    g_b += t.dw_db[k] * dot;
    if (d_cube) {
      double* g = d_cube->texel(t.texel[k]);
      for (int c = 0; c < 3; ++c) g[c] += t.weight[k] * d_out[c];
    }
  }
  // a = (d.u)/(d.m), b = (d.v)/(d.m)
  const auto& fb = face_bases()[fc.face];
  const double ma = dir.dot(fb.ma);
  return (g_a * (fb.u - fc.a * fb.ma) + g_b * (fb.v - fc.b * fb.ma)) / ma;
}

Vec3 rotate_quarter(const Vec3& v, int axis, int quarter_turns) {
  Vec3 r = v;
  const int k = ((quarter_turns % 4) + 4) % 4;
  for (int i = 0; i < k; ++i) {
    switch (axis) {
      case 0: r = Vec3(r.x(), -r.z(), r.y()); break;
      case 1: r = Vec3(r.z(), r.y(), -r.x()); break;
      case 2: r = Vec3(-r.y(), r.x(), r.z()); break;
      default: throw std::invalid_argument("rotate_quarter: axis must be 0, 1 or 2");
    }
  }
  return r;
}

Mat3 quarter_rotation_matrix(int axis, int quarter_turns) {
  Mat3 m;
  for (int c = 0; c < 3; ++c) m.col(c) = rotate_quarter(Vec3::Unit(c), axis, quarter_turns);
  return m;
}

const std::vector<Mat3>& cube_rotation_group() {
  static const std::vector<Mat3> group = [] {
    std::vector<Mat3> g{Mat3::Identity()};
    for (std::size_t k = 0; k < g.size(); ++k)
      for (int axis = 0; axis < 3; ++axis) {
        const Mat3 m = quarter_rotation_matrix(axis, 1) * g[k];
        bool seen = false;
        for (const Mat3& e : g) seen = seen || e == m;
        if (!seen) g.push_back(m);
      }
    return g;
  }();
  return group;
}

std::size_t rotate_texel(int n, std::size_t texel, const Mat3& rotation) {
  const std::size_t per_face = static_cast<std::size_t>(n) * n;
  const int f = static_cast<int>(texel / per_face);
  const int rem = static_cast<int>(texel % per_face);
  const double a = (2.0 * (rem % n) + 1.0 - n) / n;
  const double b = (2.0 * (rem / n) + 1.0 - n) / n;
  const FaceCoord fc = dir_to_face(rotation * face_to_dir(f, a, b));
  const int i = static_cast<int>(std::lround((fc.a * n + n - 1.0) * 0.5));
  const int j = static_cast<int>(std::lround((fc.b * n + n - 1.0) * 0.5));
  return (static_cast<std::size_t>(fc.face) * n + j) * n + i;
}

CubeImage rotate_cube_quarter(const CubeImage& cube, int axis, int quarter_turns) {
  const int n = cube.size();
  CubeImage out(n);
  for (int f = 0; f < 6; ++f) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const double a = (2.0 * i + 1.0 - n) / n;
        const double b = (2.0 * j + 1.0 - n) / n;
        const Vec3 src = rotate_quarter(face_to_dir(f, a, b), axis, -quarter_turns);
        const FaceCoord fc = dir_to_face(src);
        const int si = static_cast<int>(std::lround((fc.a * n + n - 1.0) * 0.5));
        const int sj = static_cast<int>(std::lround((fc.b * n + n - 1.0) * 0.5));
        const double* s = cube.texel(cube.texel_index(fc.face, si, sj));
        double* d = out.texel(out.texel_index(f, i, j));
        d[0] = s[0];
        d[1] = s[1];
        d[2] = s[2];
      }
    }
  }
  return out;
}

EquirectTaps equirect_taps(int height, int width, double theta, double phi) {
  EquirectTaps t;
  double y = theta / kPi * height - 0.5;
  double dy_dtheta = height / kPi;
  if (y <= 0.0) {
    y = 0.0;
    dy_dtheta = 0.0;
  } else if (y >= height - 1) {
    y = height - 1;
    dy_dtheta = 0.0;
  }
  const int y0 = std::min(static_cast<int>(std::floor(y)), std::max(height - 2, 0));
  const int y1 = std::min(y0 + 1, height - 1);
  const double fy = y - y0;

  const double x = (phi + kPi) / (2.0 * kPi) * width - 0.5;
  const double dx_dphi = width / (2.0 * kPi);
  const double xf = std::floor(x);
  const double fx = x - xf;
  int x0 = static_cast<int>(xf) % width;
  if (x0 < 0) x0 += width;
  const int x1 = (x0 + 1) % width;

  auto pix = [&](int r, int c) { return static_cast<std::size_t>(r) * width + c; };
  t.pixel = {pix(y0, x0), pix(y0, x1), pix(y1, x0), pix(y1, x1)};
  t.weight = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  t.dw_dphi = {-(1 - fy) * dx_dphi, (1 - fy) * dx_dphi, -fy * dx_dphi, fy * dx_dphi};
  t.dw_dtheta = {-(1 - fx) * dy_dtheta, -fx * dy_dtheta, (1 - fx) * dy_dtheta, fx * dy_dtheta};
  return t;
}

Vec3 equirect_pixel_direction(int height, int width, int row, int col) {
  const double theta = (row + 0.5) * kPi / height;
  const double phi = -kPi + (col + 0.5) * 2.0 * kPi / width;
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

std::size_t texel_containing(int size, const Vec3& dir) {
  const FaceCoord fc = dir_to_face(dir);
  const auto cell = [size](double x) { return std::clamp(static_cast<int>(std::floor(0.5 * (x + 1.0) * size)), 0, size - 1); };
  return (static_cast<std::size_t>(fc.face) * size + cell(fc.b)) * size + cell(fc.a);
}

Image cube_to_equirect(const CubeImage& cube, int height, int width, CubeFilter filter) {
  Image out(width, height, 3);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const Vec3 d = equirect_pixel_direction(height, width, r, c);
      const Vec3 v = filter == CubeFilter::kBilinear ? sample_cube(cube, d) : Vec3(Eigen::Map<const Vec3>(cube.texel(texel_containing(cube.size(), d))));
      for (int k = 0; k < 3; ++k) out.at(c, r, k) = v[k];
    }
  }
  return out;
}

CubeImage equirect_to_cube(const Image& equirect, int size) {
  if (equirect.channels() < 3) throw std::invalid_argument("equirect_to_cube: need an RGB image");
  CubeImage out(size);
  const int H = equirect.height(), W = equirect.width();
  std::vector<double> weight(out.texel_count(), 0.0);
  for (int r = 0; r < H; ++r) {
    const double w = std::sin((r + 0.5) * kPi / H);
    for (int c = 0; c < W; ++c) {
      const std::size_t t = texel_containing(size, equirect_pixel_direction(H, W, r, c));
      const auto px = equirect.pixel(static_cast<std::size_t>(r) * W + c);
      double* o = out.texel(t);
      for (int k = 0; k < 3; ++k) o[k] += w * px[k];
      weight[t] += w;
    }
  }
  for (int f = 0; f < 6; ++f) {
    for (int j = 0; j < size; ++j) {
      for (int i = 0; i < size; ++i) {
        const std::size_t idx = out.texel_index(f, i, j);
        double* o = out.texel(idx);
        if (weight[idx] > 0.0) {
          for (int k = 0; k < 3; ++k) o[k] /= weight[idx];
          continue;
        }
        const Vec3 d = texel_direction(f, i, j, size);
        const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
        const double phi = std::atan2(d.y(), d.x());
        const EquirectTaps t = equirect_taps(H, W, theta, phi);
        for (int k = 0; k < 4; ++k) {
          const auto px = equirect.pixel(t.pixel[k]);
          for (int c = 0; c < 3; ++c) o[c] += t.weight[k] * px[c];
        }
      }
    }
  }
  return out;
}

}  // namespace glossplat
