#include "mv3d/camera.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mv3d {

Camera camera_from_viewpoint(const Viewpoint& vp, float vfov_deg, int width, int height) {
  if (std::abs(std::abs(vp.elevation_deg) - 90.0f) < 1e-6f) {
    throw std::invalid_argument("camera_from_viewpoint: elevation " +
                                std::to_string(vp.elevation_deg) + " degenerates the up vector");
  }
  const float az = deg_to_rad(vp.azimuth_deg);
  const float el = deg_to_rad(vp.elevation_deg);
  const float r = vp.distance;

  Camera cam;
  cam.position = {r * std::cos(el) * std::cos(az), r * std::cos(el) * std::sin(az),
                  r * std::sin(el)};
  const Vec3 forward = normalized(-cam.position);  // looks at the origin
  const Vec3 world_up{0, 0, 1};
  const Vec3 right = normalized(cross(forward, world_up));
  const Vec3 down = cross(forward, right);
  cam.rotation = Mat3::from_rows(right, down, forward);

  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = (static_cast<float>(height) / 2.0f) / std::tan(deg_to_rad(vfov_deg) / 2.0f);
  cam.cx = (static_cast<float>(width) - 1.0f) / 2.0f;
  cam.cy = (static_cast<float>(height) - 1.0f) / 2.0f;
  return cam;
}

std::optional<PixelCoord> project(const Camera& cam, const Vec3& world) {
  const Vec3 p = world_to_camera(cam, world);
  if (p.z <= 0) return std::nullopt;
  return PixelCoord{cam.cx + cam.fx * p.x / p.z, cam.cy + cam.fy * p.y / p.z, p.z};
}

}  // namespace mv3d
