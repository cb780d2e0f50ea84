// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/envlight.hpp"

#include "glossplat/parallel.hpp"

#include <algorithm>
#include <stdexcept>

namespace glossplat {

namespace {

double van_der_corput(std::uint32_t bits) {
  bits = (bits << 16u) | (bits >> 16u);
  bits = ((bits & 0x55555555u) << 1u) | ((bits & 0xAAAAAAAAu) >> 1u);
  bits = ((bits & 0x33333333u) << 2u) | ((bits & 0xCCCCCCCCu) >> 2u);
  bits = ((bits & 0x0F0F0F0Fu) << 4u) | ((bits & 0xF0F0F0F0u) >> 4u);
  bits = ((bits & 0x00FF00FFu) << 8u) | ((bits & 0xFF00FF00u) >> 8u);
  return static_cast<double>(bits) * 0x1.0p-32;
}

// Orthonormal basis around n (Duff et al. 2017).
void onb(const Vec3& n, Vec3& t, Vec3& b) {
  const double sign = std::copysign(1.0, n.z());
  const double a = -1.0 / (sign + n.z());
  const double c = n.x() * n.y() * a;
  t = Vec3(1.0 + sign * n.x() * n.x() * a, sign * c, -sign * n.x());
  b = Vec3(c, sign + n.y() * n.y() * a, -n.y());
}

double ggx_d(double n_dot_h, double alpha) {
  const double a2 = alpha * alpha;
  const double d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
  return a2 / (kPi * d * d);
}

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int ilog2(int n) {
  int k = 0;
  while ((1 << (k + 1)) <= n) ++k;
  return k;
}

}  // namespace

std::vector<CubeImage> box_pyramid(const CubeImage& base) {
  std::vector<CubeImage> pyr{base};
  while (pyr.back().size() > 1) {
    const CubeImage& src = pyr.back();
    const int n = src.size() / 2;
    CubeImage dst(n);
    for (int f = 0; f < 6; ++f)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          double* d = dst.texel(dst.texel_index(f, i, j));
          const double* s00 = src.texel(src.texel_index(f, 2 * i, 2 * j));
          const double* s10 = src.texel(src.texel_index(f, 2 * i + 1, 2 * j));
          const double* s01 = src.texel(src.texel_index(f, 2 * i, 2 * j + 1));
          const double* s11 = src.texel(src.texel_index(f, 2 * i + 1, 2 * j + 1));
          for (int c = 0; c < 3; ++c) d[c] = 0.25 * ((s00[c] + s10[c]) + (s01[c] + s11[c]));
        }
    pyr.push_back(std::move(dst));
  }
  return pyr;
}

int max_prefilter_levels(int base_size) {
  if (!is_pow2(base_size)) throw std::invalid_argument("prefilter: base size must be a power of two");
  return ilog2(base_size) + 1;
}

PrefilterOperator::PrefilterOperator(int base_size, const PrefilterSettings& settings)
    : base_size_(base_size), settings_(settings) {
  if (!is_pow2(base_size)) throw std::invalid_argument("prefilter: base size must be a power of two");
  if (settings.level_count < 2) throw std::invalid_argument("prefilter: need at least 2 levels");
  if (settings.level_count > ilog2(base_size) + 1)
    throw std::invalid_argument("prefilter: too many levels for the base size");
  if (settings.samples_per_texel < 32) throw std::invalid_argument("prefilter: need at least 32 samples per texel");

  pyramid_levels_ = ilog2(base_size) + 1;
  const int L = settings.level_count;
  const int N = settings.samples_per_texel;
  const double texel_solid_angle = 4.0 * kPi / (6.0 * base_size * base_size);
  offsets_.resize(L);
  taps_.resize(L);

  const std::vector<Mat3>& group = cube_rotation_group();
  const int G = static_cast<int>(group.size());
  std::vector<int> inverse(G);
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b)
      if (group[b] == group[a].transpose()) inverse[a] = b;

  using RawTaps = std::vector<std::pair<std::uint64_t, double>>;
  const auto key = [](int pk, std::size_t tex) { return (static_cast<std::uint64_t>(pk) << 32) | tex; };
  const auto merged = [](RawTaps raw) {
    std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Tap> row;
    for (const auto& [k, w] : raw) {
      const auto pk = static_cast<std::uint8_t>(k >> 32);
      const auto tex = static_cast<std::uint32_t>(k & 0xFFFFFFFFu);
      if (!row.empty() && row.back().pyramid_level == pk && row.back().texel == tex) {
        row.back().weight += w;
      } else {
        row.push_back({pk, tex, w});
      }
    }
    return row;
  };
  const auto rotated = [&](const std::vector<Tap>& row, const Mat3& g, double scale, RawTaps& out) {
    for (const Tap& tap : row)
      out.emplace_back(key(tap.pyramid_level, rotate_texel(base_size >> tap.pyramid_level, tap.texel, g)),
                       tap.weight * scale);
  };

  for (int level = 1; level < L; ++level) {
    const int size = base_size >> level;
    const double rho = static_cast<double>(level) / (L - 1);
    const double alpha = rho * rho;
    const std::size_t ntex = static_cast<std::size_t>(6) * size * size;
    std::vector<std::vector<Tap>> rows(ntex);

    // Sample patterns are drawn once per orbit of the cube rotation group (at
    // its lowest texel index) and carried to the other members, which makes
    // the operator commute with quarter-turn rotations of the env.
    std::vector<std::size_t> canon(ntex);
    std::vector<int> carry(ntex, 0);
    for (std::size_t t = 0; t < ntex; ++t) {
      canon[t] = t;
      for (int g = 1; g < G; ++g) {
        const std::size_t u = rotate_texel(size, t, group[g]);
        if (u < canon[t]) {
          canon[t] = u;
          carry[t] = inverse[g];
        }
      }
    }

    parallel_for(ntex, [&](std::size_t t) {
      if (canon[t] != t) return;
      const int face = static_cast<int>(t / (static_cast<std::size_t>(size) * size));
      const int rem = static_cast<int>(t % (static_cast<std::size_t>(size) * size));
      const Vec3 n = texel_direction(face, rem % size, rem / size, size);
      Vec3 tx, ty;
      onb(n, tx, ty);
      std::uint64_t st = hash_combine(hash_combine(settings.seed, static_cast<std::uint64_t>(level)), t);
      const double off0 = to_unit_double(splitmix64(st));
      const double off1 = to_unit_double(splitmix64(st));

      RawTaps raw;
      raw.reserve(static_cast<std::size_t>(N) * 8);
      double total = 0.0;
      for (int k = 0; k < N; ++k) {
        double x1 = static_cast<double>(k) / N + off0;
        double x2 = van_der_corput(static_cast<std::uint32_t>(k)) + off1;
        x1 -= std::floor(x1);
        x2 -= std::floor(x2);
        const double phi = 2.0 * kPi * x1;
        const double cos2 = (1.0 - x2) / (1.0 + (alpha * alpha - 1.0) * x2);
        const double cos_t = std::sqrt(std::clamp(cos2, 0.0, 1.0));
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        const Vec3 h = (sin_t * std::cos(phi)) * tx + (sin_t * std::sin(phi)) * ty + cos_t * n;
        const double n_dot_h = n.dot(h);
        const Vec3 l = 2.0 * n_dot_h * h - n;
        const double n_dot_l = n.dot(l);
        if (!(n_dot_l > 0.0)) continue;
        const double pdf = ggx_d(n_dot_h, alpha) * 0.25;
        const double sample_solid_angle = 1.0 / (N * pdf);
        double lod = 0.5 * std::log2(sample_solid_angle / texel_solid_angle) + settings.lod_bias;
        lod = std::clamp(lod, 0.0, static_cast<double>(pyramid_levels_ - 1));
        const int k0 = std::min(static_cast<int>(lod), pyramid_levels_ - 1);
        const double fk = lod - k0;
        const FaceCoord fc = dir_to_face(l);
        for (int side = 0; side < 2; ++side) {
          const int pk = k0 + side;
          const double wl = side == 0 ? (1.0 - fk) : fk;
          if (wl == 0.0 || pk >= pyramid_levels_) continue;
          const CubeTaps ct = cube_taps(fc, base_size >> pk);
          for (int q = 0; q < 4; ++q) {
            if (ct.weight[q] == 0.0) continue;
            raw.emplace_back(key(pk, ct.texel[q]), n_dot_l * wl * ct.weight[q]);
          }
        }
        total += n_dot_l;
      }
      for (auto& r : raw) r.second /= total;
      std::vector<Tap> row = merged(std::move(raw));

      std::vector<int> stabilizer;
      for (int g = 1; g < G; ++g)
        if (rotate_texel(size, t, group[g]) == t) stabilizer.push_back(g);
      if (!stabilizer.empty()) {
        const double share = 1.0 / (1.0 + stabilizer.size());
        RawTaps sym;
        rotated(row, group[0], share, sym);
        for (int g : stabilizer) rotated(row, group[g], share, sym);
        row = merged(std::move(sym));
      }
      rows[t] = std::move(row);
    });

    parallel_for(ntex, [&](std::size_t t) {
      if (canon[t] == t) return;
      RawTaps raw;
      rotated(rows[canon[t]], group[carry[t]], 1.0, raw);
      rows[t] = merged(std::move(raw));
    });

    offsets_[level].resize(ntex + 1);
    std::size_t count = 0;
    for (std::size_t t = 0; t < ntex; ++t) {
      offsets_[level][t] = count;
      count += rows[t].size();
    }
    offsets_[level][ntex] = count;
    taps_[level].reserve(count);
    for (auto& r : rows) taps_[level].insert(taps_[level].end(), r.begin(), r.end());
  }
}

std::vector<PrefilterOperator::Tap> PrefilterOperator::row(int level, std::size_t texel) const {
  const auto& off = offsets_.at(level);
  return {taps_[level].begin() + off.at(texel), taps_[level].begin() + off.at(texel + 1)};
}

EnvCubeMipmap PrefilterOperator::apply(const CubeImage& base) const {
  EnvCubeMipmap env;
  env.levels.push_back(base);
  for (int l = 1; l < settings_.level_count; ++l) env.levels.emplace_back(base_size_ >> l);
  refresh(env);
  return env;
}

void PrefilterOperator::refresh(EnvCubeMipmap& env) const {
  if (env.base_size() != base_size_ || env.level_count() != settings_.level_count)
    throw std::invalid_argument("prefilter: mipmap shape does not match the operator");
  const std::vector<CubeImage> pyr = box_pyramid(env.levels[0]);
  for (int l = 1; l < settings_.level_count; ++l) {
    CubeImage& out = env.levels[l];
    const auto& off = offsets_[l];
    const auto& taps = taps_[l];
    parallel_for(out.texel_count(), [&](std::size_t t) {
      double acc[3] = {0, 0, 0};
      for (std::size_t k = off[t]; k < off[t + 1]; ++k) {
        const double* s = pyr[taps[k].pyramid_level].texel(taps[k].texel);
        for (int c = 0; c < 3; ++c) acc[c] += taps[k].weight * s[c];
      }
      double* o = out.texel(t);
      for (int c = 0; c < 3; ++c) o[c] = acc[c];
    });
  }
}

void PrefilterOperator::backward(const std::vector<CubeImage>& level_grads, CubeImage& base_grad) const {
  std::vector<CubeImage> pyr_grad;
  for (int k = 0; k < pyramid_levels_; ++k) pyr_grad.emplace_back(base_size_ >> k);
  for (int l = 1; l < settings_.level_count && l < static_cast<int>(level_grads.size()); ++l) {
    const CubeImage& g = level_grads[l];
    const auto& off = offsets_[l];
    const auto& taps = taps_[l];
    for (std::size_t t = 0; t < g.texel_count(); ++t) {
      const double* gt = g.texel(t);
      if (gt[0] == 0.0 && gt[1] == 0.0 && gt[2] == 0.0) continue;
      for (std::size_t k = off[t]; k < off[t + 1]; ++k) {
        double* d = pyr_grad[taps[k].pyramid_level].texel(taps[k].texel);
        for (int c = 0; c < 3; ++c) d[c] += taps[k].weight * gt[c];
      }
    }
  }
  for (int k = pyramid_levels_ - 1; k >= 1; --k) {
    const CubeImage& parent = pyr_grad[k];
    CubeImage& child = pyr_grad[k - 1];
    const int n = parent.size();
    for (int f = 0; f < 6; ++f)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double* p = parent.texel(parent.texel_index(f, i, j));
          for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
              double* c = child.texel(child.texel_index(f, 2 * i + di, 2 * j + dj));
              for (int ch = 0; ch < 3; ++ch) c[ch] += 0.25 * p[ch];
            }
        }
  }
  auto& bg = base_grad.data();
  const auto& p0 = pyr_grad[0].data();
  for (std::size_t i = 0; i < bg.size(); ++i) bg[i] += p0[i];
  if (!level_grads.empty()) {
    const auto& g0 = level_grads[0].data();
    for (std::size_t i = 0; i < bg.size(); ++i) bg[i] += g0[i];
  }
}

EnvCubeMipmap prefilter_env(const CubeImage& base, const PrefilterSettings& settings) {
  for (double v : base.data())
    if (!std::isfinite(v)) throw std::invalid_argument("prefilter: base contains non-finite values");
  return PrefilterOperator(base.size(), settings).apply(base);
}

std::vector<CubeImage> zero_level_grads(const EnvCubeMipmap& env) {
  std::vector<CubeImage> g;
  for (const auto& l : env.levels) g.emplace_back(l.size());
  return g;
}

namespace {

struct LevelBlend {
  int lo = 0;
  double frac = 0.0;
  double dfrac_drho = 0.0;
};

LevelBlend level_blend(int level_count, double roughness, bool single_level) {
  LevelBlend b;
  if (single_level || level_count < 2) return b;
  const double scale = level_count - 1;
  double lambda = roughness * scale;
  b.dfrac_drho = scale;
  if (lambda <= 0.0) {
    lambda = 0.0;
    b.dfrac_drho = 0.0;
  } else if (lambda >= scale) {
    lambda = scale;
    b.dfrac_drho = 0.0;
  }
  b.lo = std::min(static_cast<int>(std::floor(lambda)), level_count - 2);
  b.frac = lambda - b.lo;
  return b;
}

}  // namespace

Vec3 sample_prefiltered(const EnvCubeMipmap& env, const Vec3& dir, double roughness, bool single_level) {
  const LevelBlend b = level_blend(env.level_count(), roughness, single_level);
  const Vec3 s0 = sample_cube(env.levels[b.lo], dir);
  if (b.frac == 0.0) return s0;
  const Vec3 s1 = sample_cube(env.levels[b.lo + 1], dir);
  return (1.0 - b.frac) * s0 + b.frac * s1;
}

SampleGrad sample_prefiltered_backward(const EnvCubeMipmap& env, const Vec3& dir, double roughness,
                                       const Vec3& d_out, std::vector<CubeImage>* level_grads, bool single_level) {
  const LevelBlend b = level_blend(env.level_count(), roughness, single_level);
  SampleGrad g;
  CubeImage* g0 = level_grads ? &(*level_grads)[b.lo] : nullptr;
  if (b.frac == 0.0) {
    g.dir = sample_cube_backward(env.levels[b.lo], dir, d_out, g0);
    if (b.dfrac_drho != 0.0 && b.lo + 1 < env.level_count()) {
      const Vec3 s0 = sample_cube(env.levels[b.lo], dir);
      const Vec3 s1 = sample_cube(env.levels[b.lo + 1], dir);
      g.roughness = d_out.dot(s1 - s0) * b.dfrac_drho;
    }
    return g;
  }
  CubeImage* g1 = level_grads ? &(*level_grads)[b.lo + 1] : nullptr;
  const Vec3 s0 = sample_cube(env.levels[b.lo], dir);
  const Vec3 s1 = sample_cube(env.levels[b.lo + 1], dir);
  g.dir = sample_cube_backward(env.levels[b.lo], dir, (1.0 - b.frac) * d_out, g0) +
          sample_cube_backward(env.levels[b.lo + 1], dir, b.frac * d_out, g1);
  g.roughness = d_out.dot(s1 - s0) * b.dfrac_drho;
  return g;
}

ShadeOutput shade_deferred(const GBuffer& gb, const Camera& camera, const EnvCubeMipmap& env, bool single_level) {
  const int W = gb.width(), H = gb.height();
  ShadeOutput out{gb.diffuse, Image(W, H, 3), Image(W, H, 3)};
  parallel_for(static_cast<std::size_t>(H), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < W; ++x) {
      if (!(gb.alpha.at(x, y, 0) > 0.0)) continue;
      const Vec3 n(gb.normal.at(x, y, 0), gb.normal.at(x, y, 1), gb.normal.at(x, y, 2));
      const double len = n.norm();
      if (len == 0.0) continue;
      const Vec3 view = -camera.pixel_ray(x, y).direction;
      const Vec3 refl = reflect_dir(view, n / len);
      const Vec3 light = sample_prefiltered(env, refl, gb.roughness.at(x, y, 0), single_level);
      for (int c = 0; c < 3; ++c) {
        out.light.at(x, y, c) = light[c];
        out.specular.at(x, y, c) = gb.tint.at(x, y, c) * light[c];
      }
    }
  });
  return out;
}

void shade_deferred_backward(const GBuffer& gb, const Camera& camera, const EnvCubeMipmap& env,
                             const ShadeOutput& fwd, const Image& d_specular, GBufferGrad& gg,
                             std::vector<CubeImage>* level_grads, bool single_level) {
  const int W = gb.width(), H = gb.height();
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!(gb.alpha.at(x, y, 0) > 0.0)) continue;
      const Vec3 gs(d_specular.at(x, y, 0), d_specular.at(x, y, 1), d_specular.at(x, y, 2));
      if (gs.isZero(0.0)) continue;
      const Vec3 n(gb.normal.at(x, y, 0), gb.normal.at(x, y, 1), gb.normal.at(x, y, 2));
      const double len = n.norm();
      if (len == 0.0) continue;
      const Vec3 nh = n / len;
      const Vec3 view = -camera.pixel_ray(x, y).direction;
      const Vec3 refl = reflect_dir(view, nh);
      Vec3 g_light;
      for (int c = 0; c < 3; ++c) {
        gg.tint.at(x, y, c) += gs[c] * fwd.light.at(x, y, c);
        g_light[c] = gs[c] * gb.tint.at(x, y, c);
      }
      const SampleGrad sg =
          sample_prefiltered_backward(env, refl, gb.roughness.at(x, y, 0), g_light, level_grads, single_level);
      gg.roughness.at(x, y, 0) += sg.roughness;
      const Vec3 g_nh = 2.0 * (view.dot(nh) * sg.dir + sg.dir.dot(nh) * view);
      const Vec3 g_n = (g_nh - nh * nh.dot(g_nh)) / len;
      for (int c = 0; c < 3; ++c) gg.normal.at(x, y, c) += g_n[c];
    }
  }
}

}  // namespace glossplat
