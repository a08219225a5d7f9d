#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mv3d/render.hpp"

namespace mv3d {

namespace {

std::vector<float> gaussian_kernel(float sigma) {
  const int radius = static_cast<int>(std::ceil(3.0f * sigma));
  std::vector<float> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (static_cast<double>(i) * i) / (sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

ImageF blur_pass(const ImageF& img, const std::vector<float>& kernel, bool horizontal) {
  const int radius = static_cast<int>(kernel.size() / 2);
  ImageF out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        float acc = 0;
        for (int t = -radius; t <= radius; ++t) {
          int sx = x, sy = y;
          if (horizontal) {
            sx = std::clamp(x + t, 0, img.width - 1);
          } else {
            sy = std::clamp(y + t, 0, img.height - 1);
          }
          acc += kernel[t + radius] * img.at(sx, sy, c);
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

}  // namespace

ImageF gaussian_blur(const ImageF& img, float sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
  const auto kernel = gaussian_kernel(sigma);
  return blur_pass(blur_pass(img, kernel, true), kernel, false);
}

std::vector<Light> basic_lights() {
  return {{normalized({1.0f, 0.4f, 0.9f}), 0.7f}, {normalized({-0.7f, -0.3f, 0.8f}), 0.7f}};
}

SceneSample sample_scene(SplitMix64& rng, const RenderConfig& cfg) {
  SceneSample s;
  s.viewpoint.azimuth_deg = static_cast<float>(rng.uniform(0.0, 360.0));
  s.viewpoint.elevation_deg = static_cast<float>(rng.uniform(-10.0, 40.0));
  s.viewpoint.distance = static_cast<float>(rng.uniform(1.7, 2.3));
  if (cfg.mode == RenderMode::Basic) {
    s.lights = basic_lights();
    return s;
  }
  const int count = cfg.light_count_min +
                    static_cast<int>(rng.uniform_int(
                        static_cast<std::uint64_t>(cfg.light_count_max - cfg.light_count_min + 1)));
  for (int i = 0; i < count; ++i) {
    const float z = static_cast<float>(rng.next_double());  // upper hemisphere
    const float phi = static_cast<float>(rng.uniform(0.0, 2.0 * kPi));
    const float rxy = std::sqrt(std::max(0.0f, 1.0f - z * z));
    Light l;
    l.direction = {rxy * std::cos(phi), rxy * std::sin(phi), z};
    l.intensity = static_cast<float>(rng.uniform(cfg.light_intensity_min, cfg.light_intensity_max));
    s.lights.push_back(l);
  }
  return s;
}

ImageU8 composite(const RenderedSample& sample, const ImageU8& background, SplitMix64& rng,
                  const RenderConfig& cfg) {
  const int w = sample.rgb.width, h = sample.rgb.height;
  if (background.width != w || background.height != h || background.channels != 3) {
    throw std::invalid_argument("composite: background " + std::to_string(background.width) + "x" +
                                std::to_string(background.height) + " does not match render " +
                                std::to_string(w) + "x" + std::to_string(h));
  }
  const ImageF bg = to_float(background);

  if (cfg.mode == RenderMode::Basic) {
    ImageU8 out = background;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!sample.mask.test(x, y)) continue;
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = sample.rgb.at(x, y, c);
      }
    }
    return out;
  }

  const float mask_sigma = static_cast<float>(rng.uniform(cfg.mask_sigma_min, cfg.mask_sigma_max));
  const float img_sigma = static_cast<float>(rng.uniform(cfg.image_sigma_min, cfg.image_sigma_max));

  ImageF mask_f(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mask_f.at(x, y, 0) = sample.mask.test(x, y) ? 1.0f : 0.0f;
  const ImageF alpha = gaussian_blur(mask_f, mask_sigma);
  const ImageF fg = gaussian_blur(to_float(sample.rgb), img_sigma);

  ImageF out(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float a = alpha.at(x, y, 0);
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = a * fg.at(x, y, c) + (1.0f - a) * bg.at(x, y, c);
      }
    }
  }
  return to_bytes(out);
}

ImageU8 flatten_on_gray(const RenderedSample& sample, std::uint8_t gray) {
  ImageU8 out(sample.rgb.width, sample.rgb.height, 3, gray);
  for (int y = 0; y < sample.rgb.height; ++y) {
    for (int x = 0; x < sample.rgb.width; ++x) {
      if (!sample.mask.test(x, y)) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = sample.rgb.at(x, y, c);
    }
  }
  return out;
}

ImageU8 procedural_background(int width, int height, SplitMix64& rng) {
  // bilinear color blobs plus per-pixel grain, which keeps the background
  // texture statistics photo-like and distinct from flat-shaded surfaces
  const int cells = 5;
  std::vector<Vec3> grid(static_cast<std::size_t>(cells) * cells);
  for (auto& g : grid) {
    g = {static_cast<float>(rng.next_double()), static_cast<float>(rng.next_double()),
         static_cast<float>(rng.next_double())};
  }
  ImageU8 out(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const float gx = static_cast<float>(x) / (width - 1) * (cells - 1);
      const float gy = static_cast<float>(y) / (height - 1) * (cells - 1);
      const int ix = std::min(cells - 2, static_cast<int>(gx));
      const int iy = std::min(cells - 2, static_cast<int>(gy));
      const float tx = gx - ix, ty = gy - iy;
      const Vec3 a = grid[iy * cells + ix] * (1 - tx) + grid[iy * cells + ix + 1] * tx;
      const Vec3 b = grid[(iy + 1) * cells + ix] * (1 - tx) + grid[(iy + 1) * cells + ix + 1] * tx;
      const Vec3 c = a * (1 - ty) + b * ty;
      const float grain = static_cast<float>(rng.uniform(-0.18, 0.18));
      out.at(x, y, 0) = float_to_byte(std::clamp(c.x + grain, 0.0f, 1.0f));
      out.at(x, y, 1) = float_to_byte(std::clamp(c.y + grain, 0.0f, 1.0f));
      out.at(x, y, 2) = float_to_byte(std::clamp(c.z + grain, 0.0f, 1.0f));
    }
  }
  return out;
}

std::vector<ImageU8> procedural_background_pool(int size, int count, std::uint64_t seed) {
  std::vector<ImageU8> pool;
  pool.reserve(count);
  for (int i = 0; i < count; ++i) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    pool.push_back(procedural_background(size, size, rng));
  }
  return pool;
}

}  // namespace mv3d
