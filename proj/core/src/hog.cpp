#include "mv3d/hog.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mv3d {

namespace {
constexpr int kCell = 8;
constexpr int kBins = 9;
constexpr float kBinWidth = 180.0f / kBins;
constexpr float kNormEps = 1e-6f;
}  // namespace

ImageF grayscale(const ImageU8& rgb) {
  ImageF out(rgb.width, rgb.height, 1);
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      out.at(x, y, 0) = (0.299f * rgb.at(x, y, 0) + 0.587f * rgb.at(x, y, 1) +
                         0.114f * rgb.at(x, y, 2)) / 255.0f;
    }
  }
  return out;
}

std::size_t hog_length(int width, int height) {
  const int cx = width / kCell, cy = height / kCell;
  return static_cast<std::size_t>(cx - 1) * (cy - 1) * 4 * kBins;
}

HogDescriptor hog(const ImageF& gray) {
  const int w = gray.width, h = gray.height;
  if (w % kCell || h % kCell) {
    throw std::invalid_argument("hog: dimensions " + std::to_string(w) + "x" + std::to_string(h) +
                                " must be multiples of the cell size " + std::to_string(kCell));
  }
  const int cx = w / kCell, cy = h / kCell;
  std::vector<float> cells(static_cast<std::size_t>(cx) * cy * kBins, 0.0f);

  auto pixel = [&](int x, int y) {
    x = std::min(std::max(x, 0), w - 1);
    y = std::min(std::max(y, 0), h - 1);
    return gray.at(x, y, 0);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float gx = pixel(x + 1, y) - pixel(x - 1, y);
      const float gy = pixel(x, y + 1) - pixel(x, y - 1);
      const float mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0) continue;
      float angle = std::atan2(gy, gx) * 180.0f / 3.14159265358979323846f;
      if (angle < 0) angle += 180.0f;  // unsigned orientation
      if (angle >= 180.0f) angle -= 180.0f;
      // linear vote between the two nearest bin centers (centers at
      // (k + 0.5) * 20 degrees, wrapping at 180)
      const float p = angle / kBinWidth - 0.5f;
      const int lo = static_cast<int>(std::floor(p));
      const float frac = p - static_cast<float>(lo);
      const int bin0 = (lo % kBins + kBins) % kBins;
      const int bin1 = (bin0 + 1) % kBins;
      float* cell = &cells[(static_cast<std::size_t>(y / kCell) * cx + x / kCell) * kBins];
      cell[bin0] += (1.0f - frac) * mag;
      cell[bin1] += frac * mag;
    }
  }

  HogDescriptor out;
  out.reserve(hog_length(w, h));
  for (int by = 0; by + 1 < cy; ++by) {
    for (int bx = 0; bx + 1 < cx; ++bx) {
      float block[4 * kBins];
      int k = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const float* cell = &cells[(static_cast<std::size_t>(by + dy) * cx + bx + dx) * kBins];
          for (int b = 0; b < kBins; ++b) block[k++] = cell[b];
        }
      }
      float sq = 0;
      for (float v : block) sq += v * v;
      const float inv = 1.0f / std::sqrt(sq + kNormEps * kNormEps);
      for (float v : block) out.push_back(v * inv);
    }
  }
  return out;
}

float hog_distance(const HogDescriptor& a, const HogDescriptor& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("hog_distance: descriptor lengths differ");
  }
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return static_cast<float>(std::sqrt(acc));
}

}  // namespace mv3d
