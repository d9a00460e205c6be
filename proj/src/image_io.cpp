#include "labelfuse/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

namespace labelfuse {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decoded PNG normalized to interleaved rows of `channels` samples,
// 8 or 16 bits each.
struct RawPng {
  int width = 0, height = 0;
  int bit_depth = 0, channels = 0;
  std::vector<uint16_t> samples16;  // bit_depth == 16
  std::vector<uint8_t> samples8;    // bit_depth == 8
};

RawPng read_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) {
    throw IoError("cannot open " + path);
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed");
  }
  std::vector<png_bytep> rows;
  RawPng out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("not a valid PNG: " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_set_strip_alpha(png);
  if (png_get_bit_depth(png, info) == 16) {
    png_set_swap(png);  // PNG is big-endian on disk
  }
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  out.channels = png_get_channels(png, info);
  const size_t count =
      static_cast<size_t>(out.width) * out.height * out.channels;
  rows.resize(out.height);
  if (out.bit_depth == 16) {
    out.samples16.resize(count);
    for (int y = 0; y < out.height; ++y) {
      rows[y] = reinterpret_cast<png_bytep>(
          out.samples16.data() + static_cast<size_t>(y) * out.width *
                                     out.channels);
    }
  } else {
    out.samples8.resize(count);
    for (int y = 0; y < out.height; ++y) {
      rows[y] = out.samples8.data() +
                static_cast<size_t>(y) * out.width * out.channels;
    }
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const std::string& path, int width, int height, int bit_depth,
               int channels, const void* samples) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) {
    throw IoError("cannot open " + path + " for writing");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed");
  }
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG write failed: " + path);
  }
  png_init_io(png, file.get());
  const int color_type =
      channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) {
    png_set_swap(png);
  }
  const size_t row_bytes =
      static_cast<size_t>(width) * channels * (bit_depth / 8);
  auto* base = static_cast<png_byte*>(const_cast<void*>(samples));
  for (int y = 0; y < height; ++y) {
    rows[y] = base + static_cast<size_t>(y) * row_bytes;
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

DepthImage read_depth_image(const std::string& path) {
  const RawPng raw = read_png(path);
  if (raw.channels != 1) {
    throw FormatError("depth image must be single-channel: " + path);
  }
  if (raw.bit_depth != 16) {
    throw FormatError("depth image must be 16-bit: " + path);
  }
  DepthImage img(raw.width, raw.height);
  for (size_t i = 0; i < raw.samples16.size(); ++i) {
    img.data[i] = raw.samples16[i] / 1000.0;
  }
  return img;
}

void write_depth_image(const DepthImage& img, const std::string& path) {
  std::vector<uint16_t> mm(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) {
    const double v = std::round(img.data[i] * 1000.0);
    mm[i] = static_cast<uint16_t>(std::clamp(v, 0.0, 65535.0));
  }
  write_png(path, img.width, img.height, 16, 1, mm.data());
}

LabelImage read_label_image(const std::string& path) {
  const RawPng raw = read_png(path);
  if (raw.channels != 1) {
    throw FormatError("label image must be single-channel: " + path);
  }
  LabelImage img(raw.width, raw.height);
  if (raw.bit_depth == 16) {
    img.data.assign(raw.samples16.begin(), raw.samples16.end());
  } else {
    img.data.assign(raw.samples8.begin(), raw.samples8.end());
  }
  return img;
}

void write_label_image(const LabelImage& img, const std::string& path) {
  write_png(path, img.width, img.height, 16, 1, img.data.data());
}

ColorImage read_color_image(const std::string& path) {
  const RawPng raw = read_png(path);
  if (raw.channels != 3 || raw.bit_depth != 8) {
    throw FormatError("color image must be 8-bit RGB: " + path);
  }
  ColorImage img(raw.width, raw.height);
  for (size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] =
        Rgb8{raw.samples8[3 * i], raw.samples8[3 * i + 1],
             raw.samples8[3 * i + 2]};
  }
  return img;
}

void write_color_image(const ColorImage& img, const std::string& path) {
  std::vector<uint8_t> rgb(img.data.size() * 3);
  for (size_t i = 0; i < img.data.size(); ++i) {
    rgb[3 * i] = img.data[i].r;
    rgb[3 * i + 1] = img.data[i].g;
    rgb[3 * i + 2] = img.data[i].b;
  }
  write_png(path, img.width, img.height, 8, 3, rgb.data());
}

NormalImage read_normal_image(const std::string& path) {
  const RawPng raw = read_png(path);
  if (raw.channels != 3 || raw.bit_depth != 16) {
    throw FormatError("normal image must be 16-bit RGB: " + path);
  }
  NormalImage img(raw.width, raw.height, Vec3::Zero());
  for (size_t i = 0; i < img.data.size(); ++i) {
    const uint16_t a = raw.samples16[3 * i];
    const uint16_t b = raw.samples16[3 * i + 1];
    const uint16_t c = raw.samples16[3 * i + 2];
    if (a == 0 && b == 0 && c == 0) {
      continue;  // invalid marker
    }
    Vec3 n(a / 65535.0 * 2 - 1, b / 65535.0 * 2 - 1, c / 65535.0 * 2 - 1);
    const double len = n.norm();
    if (len > 1e-6) {
      img.data[i] = n / len;
    }
  }
  return img;
}

void write_normal_image(const NormalImage& img, const std::string& path) {
  std::vector<uint16_t> enc(img.data.size() * 3, 0);
  for (size_t i = 0; i < img.data.size(); ++i) {
    const Vec3& n = img.data[i];
    if (n.isZero()) {
      continue;
    }
    for (int c = 0; c < 3; ++c) {
      enc[3 * i + c] = static_cast<uint16_t>(
          std::clamp(std::round((n[c] + 1) / 2 * 65535.0), 0.0, 65535.0));
    }
  }
  write_png(path, img.width, img.height, 16, 3, enc.data());
}

}  // namespace labelfuse
