#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace rsweep {

// Row-major float raster with interleaved channels. Pixel (0,0) is the
// centre of the top-left texel.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

  float& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

using Mask = std::vector<uint8_t>;  // 1 = valid, row-major

}  // namespace rsweep
