#include "dfr/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "dfr/errors.hpp"

namespace dfr {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open image: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("malformed png: " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize anything to 8-bit grayscale.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  Image img(static_cast<int>(png_get_image_width(png, info)),
            static_cast<int>(png_get_image_height(png, info)));
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] = img.pixels.data() + static_cast<size_t>(y) * img.width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const Image& image, const std::string& path) {
  if (image.empty()) throw ParameterError("write_png: empty image");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write image: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png write failed: " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() +
                                             static_cast<size_t>(y) * image.width));
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

Image resize_bilinear(const Image& image, int target_width, int target_height) {
  if (target_width < 1 || target_height < 1)
    throw ParameterError("resize: target dimensions must be positive");
  if (image.empty()) throw ParameterError("resize: empty image");
  if (target_width == image.width && target_height == image.height) return image;

  Image out(target_width, target_height);
  const double sx = static_cast<double>(image.width) / target_width;
  const double sy = static_cast<double>(image.height) / target_height;
  for (int y = 0; y < target_height; ++y) {
    // Sample at source pixel centers.
    const double fy = (y + 0.5) * sy - 0.5;
    const int y0 = std::max(0, std::min(image.height - 1, static_cast<int>(std::floor(fy))));
    const int y1 = std::min(image.height - 1, y0 + 1);
    const double wy = std::max(0.0, std::min(1.0, fy - y0));
    for (int x = 0; x < target_width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int x0 = std::max(0, std::min(image.width - 1, static_cast<int>(std::floor(fx))));
      const int x1 = std::min(image.width - 1, x0 + 1);
      const double wx = std::max(0.0, std::min(1.0, fx - x0));
      const double top = image.at(x0, y0) * (1.0 - wx) + image.at(x1, y0) * wx;
      const double bot = image.at(x0, y1) * (1.0 - wx) + image.at(x1, y1) * wx;
      out.at(x, y) = static_cast<uint8_t>(std::lround(top * (1.0 - wy) + bot * wy));
    }
  }
  return out;
}

}  // namespace dfr
