#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wearcnn {

/// 8-bit RGB image, row-major, interleaved channels.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {}

  std::uint8_t& at(int y, int x, int c) {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  const std::uint8_t& at(int y, int x, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

/// Bilinear resampling with pixel-center alignment.
inline Image bilinear_resize(const Image& src, int new_width, int new_height) {
  if (new_width <= 0 || new_height <= 0) {
    throw std::invalid_argument("bilinear_resize: target size must be positive");
  }
  if (src.width == new_width && src.height == new_height) return src;
  Image dst(new_width, new_height);
  const double sx = static_cast<double>(src.width) / new_width;
  const double sy = static_cast<double>(src.height) / new_height;
  for (int y = 0; y < new_height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    y0 = std::clamp(y0, 0, src.height - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    for (int x = 0; x < new_width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      x0 = std::clamp(x0, 0, src.width - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c);
        const double bottom = (1.0 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c);
        const double v = (1.0 - wy) * top + wy * bottom;
        dst.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(v + 0.5, 0.0, 255.0));
      }
    }
  }
  return dst;
}

}  // namespace wearcnn
