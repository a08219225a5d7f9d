#pragma once

#include <cstdint>
#include <vector>

namespace mv3d {

// Interleaved row-major byte image (1 or 3 channels).
struct ImageU8 {
  int width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> px;

  ImageU8() = default;
  ImageU8(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        px(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return px[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return px[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// Float image, same layout, values nominally in [0,1].
struct ImageF {
  int width = 0, height = 0, channels = 0;
  std::vector<float> px;

  ImageF() = default;
  ImageF(int w, int h, int c, float fill = 0)
      : width(w), height(h), channels(c),
        px(static_cast<std::size_t>(w) * h * c, fill) {}

  float& at(int x, int y, int c) {
    return px[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c) const {
    return px[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// 16-bit depth image; 65535 marks background.
struct DepthImage {
  int width = 0, height = 0;
  std::vector<std::uint16_t> px;

  DepthImage() = default;
  DepthImage(int w, int h, std::uint16_t fill = 65535)
      : width(w), height(h), px(static_cast<std::size_t>(w) * h, fill) {}

  std::uint16_t& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }
};

// Foreground mask, 0 or 255.
struct MaskImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> px;

  MaskImage() = default;
  MaskImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), px(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }
  bool test(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x] != 0; }
};

inline std::uint8_t float_to_byte(float v) {
  float s = v * 255.0f + 0.5f;
  if (s < 0) s = 0;
  if (s > 255) s = 255;
  return static_cast<std::uint8_t>(s);
}

inline ImageF to_float(const ImageU8& img) {
  ImageF out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < img.px.size(); ++i) out.px[i] = img.px[i] / 255.0f;
  return out;
}

inline ImageU8 to_bytes(const ImageF& img) {
  ImageU8 out(img.width, img.height, img.channels);
  for (std::size_t i = 0; i < img.px.size(); ++i) out.px[i] = float_to_byte(img.px[i]);
  return out;
}

// Center square crop followed by nearest-neighbor resampling to size x size.
inline ImageU8 center_crop_resize(const ImageU8& img, int size) {
  const int side = img.width < img.height ? img.width : img.height;
  const int x0 = (img.width - side) / 2;
  const int y0 = (img.height - side) / 2;
  ImageU8 out(size, size, img.channels);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const int sx = x0 + static_cast<int>((static_cast<float>(x) + 0.5f) * side / size);
      const int sy = y0 + static_cast<int>((static_cast<float>(y) + 0.5f) * side / size);
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

}  // namespace mv3d
