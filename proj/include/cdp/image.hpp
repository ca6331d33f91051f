// Copyright 2026 The cdpbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdp {

/// Grayscale raster with double precision samples, row major.
/// Intensity convention: 0 = full ink (black), 1 = bare substrate (white).
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("Image: dimensions must be positive");
    px_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return px_.size(); }

  double& at(int y, int x) { return px_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int y, int x) const { return px_[static_cast<std::size_t>(y) * width_ + x]; }
  double& operator[](std::size_t i) { return px_[i]; }
  double operator[](std::size_t i) const { return px_[i]; }

  std::vector<double>& pixels() { return px_; }
  const std::vector<double>& pixels() const { return px_; }
  double* data() { return px_.data(); }
  const double* data() const { return px_.data(); }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  double mean() const {
    double s = 0.0;
    for (double v : px_) s += v;
    return s / static_cast<double>(px_.size());
  }

  bool is_binary() const {
    for (double v : px_)
      if (v != 0.0 && v != 1.0) return false;
    return true;
  }

  bool in_unit_range() const {
    for (double v : px_)
      if (!(v >= 0.0 && v <= 1.0)) return false;
    return true;
  }

  bool all_finite() const {
    for (double v : px_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> px_;
};

inline void require_same_shape(const Image& a, const Image& b, const char* where) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
}

inline Image flip_horizontal(const Image& img) {
  Image out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.at(y, x) = img.at(y, img.width() - 1 - x);
  return out;
}

inline Image flip_vertical(const Image& img) {
  Image out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.at(y, x) = img.at(img.height() - 1 - y, x);
  return out;
}

/// Counter-clockwise quarter turns; k is taken modulo 4. Non-square images
/// only support k in {0, 2}.
inline Image rotate90(const Image& img, int k) {
  k = ((k % 4) + 4) % 4;
  if (k == 0) return img;
  if (img.width() != img.height() && (k == 1 || k == 3))
    throw std::invalid_argument("rotate90: quarter turns require a square image");
  const int w = img.width(), h = img.height();
  if (k == 2) {
    Image out(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(y, x) = img.at(h - 1 - y, w - 1 - x);
    return out;
  }
  Image out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (k == 1)
        out.at(w - 1 - x, y) = img.at(y, x);
      else
        out.at(x, h - 1 - y) = img.at(y, x);
    }
  return out;
}

/// Power-law intensity map. gamma == 1 is an exact identity.
inline Image apply_gamma(const Image& img, double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("apply_gamma: gamma must be positive");
  if (gamma == 1.0) return img;
  Image out = img;
  for (auto& v : out.pixels()) v = std::pow(v, gamma);
  return out;
}

inline Image clamp_unit(const Image& img) {
  Image out = img;
  for (auto& v : out.pixels()) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return out;
}

}  // namespace cdp
