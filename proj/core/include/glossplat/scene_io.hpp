// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/camera.hpp"
#include "glossplat/image.hpp"
#include "glossplat/losses.hpp"
#include "glossplat/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace glossplat {

struct SceneView {
  std::string name;
  std::filesystem::path image_path;
  Camera camera;
  Image rgb;    // empty when images were not loaded
  Image alpha;  // empty when the image has no alpha channel
};

struct Scene {
  std::vector<SceneView> views;
  Vec3 background = Vec3::Zero();
  std::optional<Aabb> bounding_box;
  int downsample = 1;
  double camera_angle_x = 0.0;
};

struct SceneLoadOptions {
  bool load_images = true;
  bool require_alpha = true;
  /// Overrides the manifest's factor when > 0.
  int downsample = 0;
  /// Image size used for cameras when images are not loaded and the manifest has no w/h.
  int fallback_width = 0;
  int fallback_height = 0;
};

/// NeRF-synthetic transforms file: camera_angle_x plus frames[].file_path and
/// frames[].transform_matrix. Optional keys: "background" [r, g, b] or
/// "white_background", "bounding_box" {"min", "max"}, "downsample", "w", "h".
Scene load_scene(const std::filesystem::path& manifest, const SceneLoadOptions& options = {});

/// Writes a transforms file for `cameras` (c2w in the NeRF convention), with
/// image paths relative to the manifest.
void write_manifest(const std::filesystem::path& manifest, const std::vector<Camera>& cameras,
                    const std::vector<std::string>& file_paths, double camera_angle_x, const Vec3& background,
                    const std::optional<Aabb>& bounding_box = {});

/// Composited RGB targets plus alpha for training and evaluation.
std::vector<TargetView> make_targets(const Scene& scene);

/// c2w in the NeRF (x right, y up, z backward) convention.
Mat4 gl_camera_to_world(const Camera& camera);

}  // namespace glossplat
