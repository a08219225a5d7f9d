#include "mv3d/pointcloud.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace mv3d {

PointCloud depth_to_points(const DepthImage& depth, const ImageU8& rgb, const Camera& cam,
                           float near, float far) {
  if (depth.width != cam.width || depth.height != cam.height) {
    throw std::invalid_argument("depth_to_points: depth " + std::to_string(depth.width) + "x" +
                                std::to_string(depth.height) + " does not match camera " +
                                std::to_string(cam.width) + "x" + std::to_string(cam.height));
  }
  PointCloud pc;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const std::uint16_t q = depth.at(x, y);
      if (q == kDepthSentinel) continue;
      const float z = dequantize_depth(q, near, far);
      pc.points.push_back(back_project(cam, static_cast<float>(x), static_cast<float>(y), z));
      pc.colors.push_back({rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2)});
    }
  }
  return pc;
}

namespace {

std::int64_t cell_key(const Vec3& p, float cell) {
  // 21 bits per axis around the origin
  const std::int64_t x = static_cast<std::int64_t>(std::floor(p.x / cell)) & 0x1FFFFF;
  const std::int64_t y = static_cast<std::int64_t>(std::floor(p.y / cell)) & 0x1FFFFF;
  const std::int64_t z = static_cast<std::int64_t>(std::floor(p.z / cell)) & 0x1FFFFF;
  return (x << 42) | (y << 21) | z;
}

}  // namespace

PointCloud voxel_thin(const PointCloud& pc, float cell_size) {
  PointCloud out;
  std::unordered_set<std::int64_t> seen;
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    if (seen.insert(cell_key(pc.points[i], cell_size)).second) {
      out.points.push_back(pc.points[i]);
      out.colors.push_back(pc.colors[i]);
    }
  }
  return out;
}

PointCloud fuse(std::span<const View> views, float cell_size, float near, float far) {
  PointCloud all;
  for (const View& v : views) {
    PointCloud pc = depth_to_points(v.depth, v.rgb, v.camera, near, far);
    all.points.insert(all.points.end(), pc.points.begin(), pc.points.end());
    all.colors.insert(all.colors.end(), pc.colors.begin(), pc.colors.end());
  }
  if (cell_size > 0) return voxel_thin(all, cell_size);
  return all;
}

PointCloud drop_isolated_points(const PointCloud& pc, float max_nn_distance) {
  // grid-accelerated nearest-neighbor radius test
  const float cell = max_nn_distance;
  std::unordered_multimap<std::int64_t, std::size_t> grid;
  grid.reserve(pc.points.size());
  for (std::size_t i = 0; i < pc.points.size(); ++i) grid.emplace(cell_key(pc.points[i], cell), i);

  PointCloud out;
  const float r2 = max_nn_distance * max_nn_distance;
  for (std::size_t i = 0; i < pc.points.size(); ++i) {
    const Vec3& p = pc.points[i];
    bool keep = false;
    for (int dx = -1; dx <= 1 && !keep; ++dx) {
      for (int dy = -1; dy <= 1 && !keep; ++dy) {
        for (int dz = -1; dz <= 1 && !keep; ++dz) {
          const Vec3 q{p.x + dx * cell, p.y + dy * cell, p.z + dz * cell};
          auto range = grid.equal_range(cell_key(q, cell));
          for (auto it = range.first; it != range.second; ++it) {
            if (it->second == i) continue;
            const Vec3 d = pc.points[it->second] - p;
            if (dot(d, d) <= r2) {
              keep = true;
              break;
            }
          }
        }
      }
    }
    if (keep) {
      out.points.push_back(p);
      out.colors.push_back(pc.colors[i]);
    }
  }
  return out;
}

}  // namespace mv3d
