#pragma once

#include <array>
#include <span>
#include <vector>

#include "mv3d/camera.hpp"
#include "mv3d/image.hpp"
#include "mv3d/render.hpp"

namespace mv3d {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::array<std::uint8_t, 3>> colors;  // parallel to points

  std::size_t size() const { return points.size(); }
};

// One (depth, rgb, camera) triple to fuse. All cameras look at the origin;
// the standard set is 6 views at elevation 20 and azimuth steps of 60.
struct View {
  DepthImage depth;
  ImageU8 rgb;
  Camera camera;
};

// Back-projects every non-sentinel pixel: z = near + q/65534*(far-near),
// camera point ((u-cx)/fx*z, (v-cy)/fy*z, z), then to world coordinates.
PointCloud depth_to_points(const DepthImage& depth, const ImageU8& rgb, const Camera& cam,
                           float near = kDepthNear, float far = kDepthFar);

// Concatenates per-view clouds in view order. cell_size > 0 enables voxel
// thinning that keeps the first point per cell (default cell 0.01).
PointCloud fuse(std::span<const View> views, float cell_size = 0.0f,
                float near = kDepthNear, float far = kDepthFar);

PointCloud voxel_thin(const PointCloud& pc, float cell_size);

// Optional cleanup for predicted (noisy) depth: drops points whose distance
// to their nearest neighbor exceeds the threshold.
PointCloud drop_isolated_points(const PointCloud& pc, float max_nn_distance);

}  // namespace mv3d
