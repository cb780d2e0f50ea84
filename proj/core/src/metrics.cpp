// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/metrics.hpp"

#include "glossplat/losses.hpp"
#include "glossplat/math.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace glossplat {

namespace {

Image clamped(const Image& img) {
  Image out = img;
  for (double& v : out.data()) v = clamp01(v);
  return out;
}

}  // namespace

double psnr(const Image& image, const Image& target) {
  if (!image.same_shape(target)) throw std::invalid_argument("psnr: image shapes differ");
  if (image.empty()) throw std::invalid_argument("psnr: empty image");
  double mse = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = clamp01(image.data()[i]) - clamp01(target.data()[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(image.size());
  if (mse < 1e-10) return kPsnrCap;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim_metric(const Image& image, const Image& target) {
  if (!image.same_shape(target)) throw std::invalid_argument("ssim: image shapes differ");
  return ssim(clamped(image), clamped(target));
}

double normal_mae(const Image& normals, const Image& target, const Image& mask) {
  if (!normals.same_shape(target) || normals.channels() != 3 || mask.channels() != 1 ||
      mask.width() != normals.width() || mask.height() != normals.height())
    throw std::invalid_argument("normal_mae: shapes differ");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    if (!(mask.data()[p] > 0.5)) continue;
    const auto a = normals.pixel(p), b = target.pixel(p);
    Vec3 na(a[0], a[1], a[2]), nb(b[0], b[1], b[2]);
    if (na.norm() > 0.0) na.normalize();
    if (nb.norm() > 0.0) nb.normalize();
    total += std::acos(std::clamp(na.dot(nb), -1.0, 1.0));
    ++count;
  }
  if (count == 0) return 0.0;
  return total / static_cast<double>(count) * 180.0 / kPi;
}

EnvMetrics env_metrics(const CubeImage& env, const CubeImage& target, int height, int width) {
  const Image a = clamped(cube_to_equirect(env, height, width));
  const Image b = clamped(cube_to_equirect(target, height, width));
  return {psnr(a, b), ssim(a, b)};
}

std::string metrics_jsonl(const std::vector<ViewMetrics>& views, const std::optional<EnvMetrics>& env) {
  std::ostringstream os;
  double sp = 0.0, ss = 0.0, sm = 0.0;
  std::size_t nm = 0;
  for (const ViewMetrics& v : views) {
    nlohmann::json j = {{"view", v.view}, {"psnr", v.psnr}, {"ssim", v.ssim}};
    if (v.normal_mae) {
      j["mae"] = *v.normal_mae;
      sm += *v.normal_mae;
      ++nm;
    }
    sp += v.psnr;
    ss += v.ssim;
    os << j.dump() << '\n';
  }
  nlohmann::json agg = {{"views", views.size()}};
  if (!views.empty()) {
    agg["psnr"] = sp / static_cast<double>(views.size());
    agg["ssim"] = ss / static_cast<double>(views.size());
  }
  if (nm > 0) agg["mae"] = sm / static_cast<double>(nm);
  if (env) {
    agg["env_psnr"] = env->psnr;
    agg["env_ssim"] = env->ssim;
  }
  os << nlohmann::json{{"aggregate", agg}}.dump() << '\n';
  return os.str();
}

}  // namespace glossplat
