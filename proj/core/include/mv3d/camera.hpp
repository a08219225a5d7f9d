#pragma once

#include <optional>

#include "mv3d/geometry.hpp"

namespace mv3d {

// Spherical viewing pose around the world origin. Azimuth 0 is the +X axis,
// world up is +Z; sampling ranges are az [0,360), el [-10,40], r [1.7,2.3].
struct Viewpoint {
  float azimuth_deg = 0;
  float elevation_deg = 0;
  float distance = 2.0f;
};

// Pinhole camera. rotation maps world to camera coordinates; its rows are
// (image right, image down, optical axis), so +z_cam is the viewing
// direction, u grows right and v grows down.
struct Camera {
  Vec3 position;
  Mat3 rotation;
  float fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
};

// Camera at the viewpoint's spherical position, optical axis through the
// origin, screen-up = world-up projected off the axis.
// fx = fy = (H/2)/tan(vfov/2), cx = (W-1)/2, cy = (H-1)/2.
// Throws for elevation +-90 (degenerate up vector).
Camera camera_from_viewpoint(const Viewpoint& vp, float vfov_deg, int width, int height);

inline Vec3 world_to_camera(const Camera& cam, const Vec3& p) {
  return cam.rotation * (p - cam.position);
}

inline Vec3 camera_to_world(const Camera& cam, const Vec3& p_cam) {
  return cam.rotation.transposed_mul(p_cam) + cam.position;
}

struct PixelCoord {
  float u = 0, v = 0;
  float z = 0;  // distance along the optical axis
};

// Perspective projection; nullopt when the point is at or behind the camera.
std::optional<PixelCoord> project(const Camera& cam, const Vec3& world);

// Pixel plus optical-axis depth back to world space.
inline Vec3 back_project(const Camera& cam, float u, float v, float z) {
  Vec3 p_cam{(u - cam.cx) / cam.fx * z, (v - cam.cy) / cam.fy * z, z};
  return camera_to_world(cam, p_cam);
}

}  // namespace mv3d
