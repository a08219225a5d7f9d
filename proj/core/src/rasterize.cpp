#include <algorithm>
#include <array>
#include <cmath>

#include "mv3d/render.hpp"

namespace mv3d {

namespace {

struct ClipVertex {
  Vec3 cam;  // camera-space position
  Vec3 color;
};

// Clips a triangle against z >= near (Sutherland-Hodgman on one plane);
// returns 0, 3 or 4 vertices.
int clip_near(const std::array<ClipVertex, 3>& in, float near, std::array<ClipVertex, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.cam.z >= near;
    const bool b_in = b.cam.z >= near;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const float t = (near - a.cam.z) / (b.cam.z - a.cam.z);
      ClipVertex v;
      v.cam = a.cam + (b.cam - a.cam) * t;
      v.color = a.color + (b.color - a.color) * t;
      out[n++] = v;
    }
  }
  return n;
}

inline float edge(float ax, float ay, float bx, float by, float cx, float cy) {
  return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

}  // namespace

Camera camera_from_viewpoint(const Viewpoint& vp, const RenderConfig& cfg, int width, int height) {
  return camera_from_viewpoint(vp, cfg.vfov_deg, width, height);
}

RenderedSample rasterize(const TriMesh& mesh, const Camera& cam, std::span<const Light> lights,
                         const RenderConfig& cfg) {
  const int w = cam.width, h = cam.height;
  RenderedSample out;
  out.rgb = ImageU8(w, h, 3, 0);
  out.depth = DepthImage(w, h, kDepthSentinel);
  out.mask = MaskImage(w, h, 0);
  out.camera = cam;

  std::vector<float> zbuf(static_cast<std::size_t>(w) * h, 1e30f);
  std::vector<Vec3> shaded(static_cast<std::size_t>(w) * h);

  for (const auto& tri : mesh.triangles) {
    std::array<ClipVertex, 3> tv;
    for (int i = 0; i < 3; ++i) {
      tv[i].cam = world_to_camera(cam, mesh.vertices[tri[i]]);
      tv[i].color = mesh.colors[tri[i]];
    }

    // flat shading from the world-space face normal
    const Vec3& w0 = mesh.vertices[tri[0]];
    const Vec3 n = normalized(cross(mesh.vertices[tri[1]] - w0, mesh.vertices[tri[2]] - w0));
    float shade = 0;
    for (const Light& l : lights) shade += l.intensity * std::max(0.0f, dot(n, l.direction));
    shade = std::min(shade, 1.0f);

    std::array<ClipVertex, 4> poly;
    const int nv = clip_near(tv, cfg.depth_near, poly);
    for (int t = 2; t < nv; ++t) {
      const ClipVertex& a = poly[0];
      const ClipVertex& b = poly[t - 1];
      const ClipVertex& c = poly[t];
      const float ax = cam.cx + cam.fx * a.cam.x / a.cam.z;
      const float ay = cam.cy + cam.fy * a.cam.y / a.cam.z;
      const float bx = cam.cx + cam.fx * b.cam.x / b.cam.z;
      const float by = cam.cy + cam.fy * b.cam.y / b.cam.z;
      const float cx = cam.cx + cam.fx * c.cam.x / c.cam.z;
      const float cy = cam.cy + cam.fy * c.cam.y / c.cam.z;

      float area = edge(ax, ay, bx, by, cx, cy);
      if (area == 0) continue;
      const float sign = area > 0 ? 1.0f : -1.0f;
      area *= sign;

      const int x0 = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}))));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max({ax, bx, cx}))));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}))));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max({ay, by, cy}))));

      const float inv_za = 1.0f / a.cam.z, inv_zb = 1.0f / b.cam.z, inv_zc = 1.0f / c.cam.z;
      for (int py = y0; py <= y1; ++py) {
        for (int px = x0; px <= x1; ++px) {
          const float fx = static_cast<float>(px), fy = static_cast<float>(py);
          const float wa = sign * edge(bx, by, cx, cy, fx, fy);
          const float wb = sign * edge(cx, cy, ax, ay, fx, fy);
          const float wc = sign * edge(ax, ay, bx, by, fx, fy);
          if (wa < 0 || wb < 0 || wc < 0) continue;
          const float la = wa / area, lb = wb / area, lc = wc / area;
          // perspective-correct: 1/z interpolates linearly in screen space
          const float inv_z = la * inv_za + lb * inv_zb + lc * inv_zc;
          const float z = 1.0f / inv_z;
          float* zp = &zbuf[static_cast<std::size_t>(py) * w + px];
          if (z >= *zp) continue;
          *zp = z;
          const Vec3 col = (a.color * (la * inv_za) + b.color * (lb * inv_zb) +
                            c.color * (lc * inv_zc)) * z;
          shaded[static_cast<std::size_t>(py) * w + px] = col * shade;
        }
      }
    }
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (zbuf[i] >= 1e30f) continue;
      out.mask.at(x, y) = 255;
      out.depth.at(x, y) = quantize_depth(zbuf[i], cfg.depth_near, cfg.depth_far);
      const Vec3& c = shaded[i];
      out.rgb.at(x, y, 0) = float_to_byte(std::clamp(c.x, 0.0f, 1.0f));
      out.rgb.at(x, y, 1) = float_to_byte(std::clamp(c.y, 0.0f, 1.0f));
      out.rgb.at(x, y, 2) = float_to_byte(std::clamp(c.z, 0.0f, 1.0f));
    }
  }
  return out;
}

RenderedSample render_view(const TriMesh& mesh, const Viewpoint& vp, std::span<const Light> lights,
                           const RenderConfig& cfg, int width, int height) {
  const Camera cam = camera_from_viewpoint(vp, cfg, width, height);
  RenderedSample s = rasterize(mesh, cam, lights, cfg);
  s.viewpoint = vp;
  return s;
}

}  // namespace mv3d
