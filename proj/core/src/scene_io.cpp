// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/scene_io.hpp"

#include "glossplat/image_io.hpp"

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace glossplat {

namespace {

using nlohmann::json;

Vec3 read_vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("manifest: " + what + " must be a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Mat4 read_matrix(const json& j, const std::string& frame) {
  if (!j.is_array() || j.size() < 3) throw std::runtime_error("manifest: malformed transform_matrix in " + frame);
  Mat4 m = Mat4::Identity();
  for (int r = 0; r < static_cast<int>(j.size()) && r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4)
      throw std::runtime_error("manifest: malformed transform_matrix in " + frame);
    for (int c = 0; c < 4; ++c) m(r, c) = j[r][c].get<double>();
  }
  if (!m.allFinite()) throw std::runtime_error("manifest: non-finite transform_matrix in " + frame);
  const Mat3 r = m.topLeftCorner<3, 3>();
  const double det = r.determinant();
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(det > 0.5) || !(ortho < 1e-3))
    throw std::runtime_error("manifest: transform_matrix rotation is not a proper rotation in " + frame);
  // Re-orthonormalize (files store rounded values).
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  m.topLeftCorner<3, 3>() = svd.matrixU() * svd.matrixV().transpose();
  return m;
}

std::filesystem::path resolve_image(const std::filesystem::path& dir, const std::string& file_path) {
  std::filesystem::path p = dir / file_path;
  if (!p.has_extension()) p += ".png";
  return p.lexically_normal();
}

}  // namespace

Scene load_scene(const std::filesystem::path& manifest, const SceneLoadOptions& opt) {
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("cannot parse manifest " + manifest.string() + ": " + e.what());
  }
  if (!j.contains("camera_angle_x") || !j.contains("frames") || !j["frames"].is_array())
    throw std::runtime_error("manifest: needs camera_angle_x and frames");
  Scene scene;
  scene.camera_angle_x = j["camera_angle_x"].get<double>();
  if (!(scene.camera_angle_x > 0.0 && scene.camera_angle_x < kPi))
    throw std::runtime_error("manifest: camera_angle_x out of range");
  if (j.contains("background")) scene.background = read_vec3(j["background"], "background");
  else if (j.value("white_background", false)) scene.background = Vec3::Ones();
  if (j.contains("bounding_box")) {
    const auto& b = j["bounding_box"];
    scene.bounding_box = Aabb{read_vec3(b.at("min"), "bounding_box.min"), read_vec3(b.at("max"), "bounding_box.max")};
  }
  scene.downsample = opt.downsample > 0 ? opt.downsample : j.value("downsample", 1);
  if (scene.downsample < 1) throw std::runtime_error("manifest: downsample must be >= 1");
  if (j["frames"].empty()) throw std::runtime_error("manifest: no frames");

  const auto dir = manifest.parent_path();
  int width = 0, height = 0;
  for (const auto& fr : j["frames"]) {
    SceneView v;
    const std::string fp = fr.at("file_path").get<std::string>();
    v.name = std::filesystem::path(fp).stem().string();
    v.image_path = resolve_image(dir, fp);
    const Mat4 c2w = read_matrix(fr.at("transform_matrix"), fp);
    int w = 0, h = 0;
    if (opt.load_images) {
      const Image raw = read_image(v.image_path);
      if (raw.channels() < 3) throw std::runtime_error("image is not RGB: " + v.image_path.string());
      if (raw.channels() == 3 && opt.require_alpha)
        throw std::runtime_error("image has no alpha channel: " + v.image_path.string());
      const Image img = downsample(raw, scene.downsample);
      v.rgb = rgb_channels(img);
      if (img.channels() == 4) v.alpha = extract_channel(img, 3);
      w = img.width();
      h = img.height();
    } else {
      w = j.value("w", opt.fallback_width) / scene.downsample;
      h = j.value("h", opt.fallback_height) / scene.downsample;
      if (w < 1 || h < 1) throw std::runtime_error("manifest: image size unknown without images (set w/h)");
    }
    if (width == 0) {
      width = w;
      height = h;
    } else if (w != width || h != height) {
      throw std::runtime_error("image dimensions differ across views: " + v.image_path.string());
    }
    v.camera = Camera::from_gl_camera_to_world(intrinsics_from_fov(w, h, scene.camera_angle_x), c2w);
    scene.views.push_back(std::move(v));
  }
  return scene;
}

Mat4 gl_camera_to_world(const Camera& camera) {
  Mat4 m = Mat4::Identity();
  Mat3 r = camera.rotation();
  r.col(1) = -r.col(1);
  r.col(2) = -r.col(2);
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = camera.position();
  return m;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<Camera>& cameras,
                    const std::vector<std::string>& file_paths, double camera_angle_x, const Vec3& background,
                    const std::optional<Aabb>& bounding_box) {
  if (cameras.size() != file_paths.size()) throw std::invalid_argument("write_manifest: size mismatch");
  json j;
  j["camera_angle_x"] = camera_angle_x;
  j["background"] = {background.x(), background.y(), background.z()};
  if (!cameras.empty()) {
    j["w"] = cameras.front().width();
    j["h"] = cameras.front().height();
  }
  if (bounding_box)
    j["bounding_box"] = {{"min", {bounding_box->lo.x(), bounding_box->lo.y(), bounding_box->lo.z()}},
                         {"max", {bounding_box->hi.x(), bounding_box->hi.y(), bounding_box->hi.z()}}};
  j["frames"] = json::array();
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const Mat4 m = gl_camera_to_world(cameras[i]);
    json rows = json::array();
    for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    j["frames"].push_back({{"file_path", file_paths[i]}, {"transform_matrix", rows}});
  }
  if (manifest.has_parent_path()) std::filesystem::create_directories(manifest.parent_path());
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot write manifest: " + manifest.string());
  out << j.dump(2) << '\n';
}

std::vector<TargetView> make_targets(const Scene& scene) {
  std::vector<TargetView> out;
  for (const auto& v : scene.views) {
    if (v.rgb.empty()) throw std::invalid_argument("make_targets: scene was loaded without images");
    TargetView t{v.camera, v.rgb, v.alpha};
    if (!v.alpha.empty()) {
      for (std::size_t p = 0; p < v.alpha.pixel_count(); ++p) {
        const double a = v.alpha.data()[p];
        for (int c = 0; c < 3; ++c) t.target.data()[p * 3 + c] = v.rgb.data()[p * 3 + c] * a + scene.background[c] * (1.0 - a);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace glossplat
