// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/image.hpp"

#include <filesystem>

namespace glossplat {

/// Decodes PNG (8/16-bit, values / max, no sRGB conversion), Radiance .hdr or
/// .pfm into RGB / RGBA / gray channel order. Throws naming the path on failure.
Image read_image(const std::filesystem::path& path);

/// Writes by extension: .png (clamped to [0, 1], x255 rounded), .hdr, .pfm.
/// PNG accepts 1, 3 or 4 channels; HDR and PFM accept 3.
void write_image(const std::filesystem::path& path, const Image& image);

/// Box-averages `factor` x `factor` blocks (trailing partial blocks dropped).
Image downsample(const Image& image, int factor);

/// Splits channel `c` out as a 1-channel image.
Image extract_channel(const Image& image, int c);

/// First three channels.
Image rgb_channels(const Image& image);

}  // namespace glossplat
