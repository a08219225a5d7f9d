#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mv3d/camera.hpp"
#include "mv3d/image.hpp"
#include "mv3d/mesh.hpp"
#include "mv3d/rng.hpp"

namespace mv3d {

inline constexpr std::uint16_t kDepthSentinel = 65535;
inline constexpr float kDepthNear = 0.5f;
inline constexpr float kDepthFar = 3.5f;
inline constexpr std::uint8_t kTargetGray = 127;

enum class RenderMode { Realistic, Basic };

struct RenderConfig {
  RenderMode mode = RenderMode::Realistic;
  int light_count_min = 2, light_count_max = 4;
  float light_intensity_min = 0.4f, light_intensity_max = 1.0f;
  float mask_sigma_min = 1.0f, mask_sigma_max = 1.3f;
  float image_sigma_min = 0.2f, image_sigma_max = 0.6f;
  float vfov_deg = 35.0f;
  float depth_near = kDepthNear, depth_far = kDepthFar;
  std::string background_dir;  // empty: procedural noise backgrounds
};

// Directional light; direction points from the surface toward the light.
struct Light {
  Vec3 direction;
  float intensity = 1.0f;
};

struct RenderedSample {
  ImageU8 rgb;       // shaded object, black outside the mask
  DepthImage depth;  // optical-axis depth, 65535 = background
  MaskImage mask;
  Camera camera;
  Viewpoint viewpoint;
};

struct SceneSample {
  Viewpoint viewpoint;
  std::vector<Light> lights;
};

inline std::uint16_t quantize_depth(float z, float near, float far) {
  float t = (z - near) / (far - near) * 65534.0f;
  if (t < 0) t = 0;
  if (t > 65534.0f) t = 65534.0f;
  return static_cast<std::uint16_t>(t + 0.5f);
}

inline float dequantize_depth(std::uint16_t q, float near, float far) {
  return near + static_cast<float>(q) / 65534.0f * (far - near);
}

Camera camera_from_viewpoint(const Viewpoint& vp, const RenderConfig& cfg, int width, int height);

// Z-buffered perspective rasterization with flat Lambertian shading summed
// over the lights and clamped to [0,1]. Triangles crossing the near plane are
// clipped. The returned sample's viewpoint field is left default.
RenderedSample rasterize(const TriMesh& mesh, const Camera& cam, std::span<const Light> lights,
                         const RenderConfig& cfg);

// The two fixed lights of basic mode (also the deterministic lighting used
// by model-similarity rendering).
std::vector<Light> basic_lights();

// Viewpoint uniform in the sampling ranges; realistic mode draws 2-4 lights
// on the upper hemisphere with intensity in [0.4,1], basic mode uses two
// fixed unit-direction lights of fixed intensity.
SceneSample sample_scene(SplitMix64& rng, const RenderConfig& cfg);

// Full render of one view: camera from the viewpoint, then rasterize.
RenderedSample render_view(const TriMesh& mesh, const Viewpoint& vp, std::span<const Light> lights,
                           const RenderConfig& cfg, int width, int height);

// Separable Gaussian, kernel radius ceil(3*sigma), clamped edges, kernel
// normalized to sum 1.
ImageF gaussian_blur(const ImageF& img, float sigma);

// Realistic mode: alpha = mask blurred with sigma ~ U[1.0,1.3], foreground
// blurred with sigma ~ U[0.2,0.6], out = alpha*fg + (1-alpha)*background.
// Basic mode: hard mask, no blur.
ImageU8 composite(const RenderedSample& sample, const ImageU8& background, SplitMix64& rng,
                  const RenderConfig& cfg);

// Object over a flat gray background (the target-image convention).
ImageU8 flatten_on_gray(const RenderedSample& sample, std::uint8_t gray = kTargetGray);

// Smooth value-noise background so the pipeline runs without external data.
ImageU8 procedural_background(int width, int height, SplitMix64& rng);

// Finite seeded set of procedural backgrounds, mirroring a directory of
// background photos.
std::vector<ImageU8> procedural_background_pool(int size, int count, std::uint64_t seed);

}  // namespace mv3d
