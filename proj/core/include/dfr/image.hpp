#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dfr {

// 8-bit grayscale raster, row-major from the top-left corner.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h, 0) {}

  uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  bool empty() const { return pixels.empty(); }
};

Image read_png(const std::string& path);
void write_png(const Image& image, const std::string& path);

Image resize_bilinear(const Image& image, int target_width, int target_height);

}  // namespace dfr
