// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace glossplat {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

// OpenCV stores BGR(A); map our channel index to OpenCV's.
int cv_channel(int c, int channels) {
  if (channels >= 3 && c < 3) return 2 - c;
  return c;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("cannot open image: " + path.string());
  const cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw std::runtime_error("cannot decode image: " + path.string());
  const int C = m.channels();
  if (C != 1 && C != 3 && C != 4) throw std::runtime_error("unsupported channel count in " + path.string());
  double scale = 1.0;
  switch (m.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F:
    case CV_64F: scale = 1.0; break;
    default: throw std::runtime_error("unsupported pixel depth in " + path.string());
  }
  cv::Mat d;
  m.convertTo(d, CV_MAKETYPE(CV_64F, C), scale);
  Image out(d.cols, d.rows, C);
  for (int y = 0; y < d.rows; ++y) {
    const double* row = d.ptr<double>(y);
    for (int x = 0; x < d.cols; ++x)
      for (int c = 0; c < C; ++c) out.at(x, y, c) = row[x * C + cv_channel(c, C)];
  }
  return out;
}

void write_image(const std::filesystem::path& path, const Image& img) {
  const std::string ext = lower_ext(path);
  const int C = img.channels();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  cv::Mat m;
  if (ext == ".png") {
    if (C != 1 && C != 3 && C != 4) throw std::invalid_argument("write_image: PNG needs 1, 3 or 4 channels");
    m = cv::Mat(img.height(), img.width(), CV_MAKETYPE(CV_8U, C));
    for (int y = 0; y < img.height(); ++y) {
      auto* row = m.ptr<unsigned char>(y);
      for (int x = 0; x < img.width(); ++x)
        for (int c = 0; c < C; ++c) {
          const double v = std::clamp(img.at(x, y, c), 0.0, 1.0);
          row[x * C + cv_channel(c, C)] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    }
  } else if (ext == ".hdr" || ext == ".pfm") {
    if (C != 3) throw std::invalid_argument("write_image: HDR/PFM need 3 channels");
    m = cv::Mat(img.height(), img.width(), CV_32FC3);
    for (int y = 0; y < img.height(); ++y) {
      auto* row = m.ptr<float>(y);
      for (int x = 0; x < img.width(); ++x)
        for (int c = 0; c < 3; ++c) row[x * 3 + cv_channel(c, 3)] = static_cast<float>(img.at(x, y, c));
    }
  } else {
    throw std::invalid_argument("write_image: unsupported extension " + ext);
  }
  if (!cv::imwrite(path.string(), m)) throw std::runtime_error("cannot write image: " + path.string());
}

Image downsample(const Image& img, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  if (factor == 1) return img;
  const int W = img.width() / factor, H = img.height() / factor, C = img.channels();
  if (W == 0 || H == 0) throw std::invalid_argument("downsample: factor larger than the image");
  Image out(W, H, C);
  const double inv = 1.0 / (factor * factor);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        double s = 0.0;
        for (int j = 0; j < factor; ++j)
          for (int i = 0; i < factor; ++i) s += img.at(x * factor + i, y * factor + j, c);
        out.at(x, y, c) = s * inv;
      }
  return out;
}

Image extract_channel(const Image& img, int c) {
  if (c < 0 || c >= img.channels()) throw std::invalid_argument("extract_channel: channel out of range");
  Image out(img.width(), img.height(), 1);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) out.data()[p] = img.pixel(p)[c];
  return out;
}

Image rgb_channels(const Image& img) {
  if (img.channels() < 3) throw std::invalid_argument("rgb_channels: fewer than 3 channels");
  Image out(img.width(), img.height(), 3);
  for (std::size_t p = 0; p < img.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c) out.data()[p * 3 + c] = img.pixel(p)[c];
  return out;
}

}  // namespace glossplat
