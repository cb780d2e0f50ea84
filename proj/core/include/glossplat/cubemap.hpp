// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/image.hpp"
#include "glossplat/math.hpp"

#include <array>
#include <vector>

namespace glossplat {

/// Square RGB cube map level: 6 faces (+X, -X, +Y, -Y, +Z, -Z) of size x size
/// texels. Texel (face, i, j) is column i, row j.
class CubeImage {
 public:
  CubeImage() = default;
  explicit CubeImage(int size, double fill = 0.0)
      : size_(size), data_(static_cast<std::size_t>(6) * size * size * 3, fill) {}

  int size() const { return size_; }
  std::size_t texel_count() const { return static_cast<std::size_t>(6) * size_ * size_; }
  std::size_t texel_index(int face, int i, int j) const {
    return (static_cast<std::size_t>(face) * size_ + j) * size_ + i;
  }
  double* texel(std::size_t t) { return data_.data() + 3 * t; }
  const double* texel(std::size_t t) const { return data_.data() + 3 * t; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const CubeImage&) const = default;

 private:
  int size_ = 0;
  std::vector<double> data_;
};

struct FaceCoord {
  int face = 0;
  double a = 0.0;  // in [-1, 1] along the face u axis
  double b = 0.0;  // in [-1, 1] along the face v axis
};

FaceCoord dir_to_face(const Vec3& dir);

/// Unnormalized direction ma + a*u + b*v for a face coordinate.
Vec3 face_to_dir(int face, double a, double b);

/// Unit direction through a texel center.
Vec3 texel_direction(int face, int i, int j, int size);

/// Four clamp-to-edge bilinear taps. Ordered (lo,lo), (hi,hi), (hi,lo), (lo,hi)
/// so the evaluation (w0*t0 + w1*t1) + (w2*t2 + w3*t3) is invariant under the
/// symmetries of the square.
struct CubeTaps {
  std::array<std::size_t, 4> texel{};
  std::array<double, 4> weight{};
  // derivatives of the weights w.r.t. the face coordinates a and b
  std::array<double, 4> dw_da{};
  std::array<double, 4> dw_db{};
};

CubeTaps cube_taps(const FaceCoord& fc, int size);

Vec3 sample_cube(const CubeImage& cube, const Vec3& dir);

/// Adds the bilinear-sample gradient into `d_cube` (if non-null) and returns the
/// gradient w.r.t. `dir`.
Vec3 sample_cube_backward(const CubeImage& cube, const Vec3& dir, const Vec3& d_out, CubeImage* d_cube);

/// Rotates a direction by quarter_turns * 90 degrees about axis 0/1/2 (x/y/z). Exact.
Vec3 rotate_quarter(const Vec3& v, int axis, int quarter_turns);
Mat3 quarter_rotation_matrix(int axis, int quarter_turns);

/// The 24 rotations mapping the cube onto itself (signed permutation matrices), identity first.
const std::vector<Mat3>& cube_rotation_group();

/// Index of the texel that `rotation` (a member of cube_rotation_group) moves `texel` to.
std::size_t rotate_texel(int size, std::size_t texel, const Mat3& rotation);

/// The cube map whose lookup in rotate_quarter(d) equals the original lookup in d.
CubeImage rotate_cube_quarter(const CubeImage& cube, int axis, int quarter_turns);

/// Latitude-longitude image: row -> theta = acos(z) in [0, pi], column -> phi = atan2(y, x) in (-pi, pi].
struct EquirectTaps {
  std::array<std::size_t, 4> pixel{};
  std::array<double, 4> weight{};
  std::array<double, 4> dw_dtheta{};
  std::array<double, 4> dw_dphi{};
};

EquirectTaps equirect_taps(int height, int width, double theta, double phi);

Vec3 equirect_pixel_direction(int height, int width, int row, int col);

enum class CubeFilter { kBilinear, kNearest };

/// Texel index whose footprint contains `dir`.
std::size_t texel_containing(int size, const Vec3& dir);

Image cube_to_equirect(const CubeImage& cube, int height, int width, CubeFilter filter = CubeFilter::kBilinear);

/// Solid-angle weighted mean of the pixels whose centers fall in each texel;
/// texels without any pixel center are sampled bilinearly. Inverts the
/// nearest-filtered cube_to_equirect when every texel holds a pixel center.
CubeImage equirect_to_cube(const Image& equirect, int size);

}  // namespace glossplat
