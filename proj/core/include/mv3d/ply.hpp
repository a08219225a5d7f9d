#pragma once

#include <string>

#include "mv3d/pointcloud.hpp"

namespace mv3d {

// ASCII PLY 1.0 with float x y z and uchar red green blue per vertex.
// Coordinates are printed with shortest round-trip formatting, so a
// write/read cycle reproduces them to 32-bit precision.
void export_ply(const PointCloud& pc, const std::string& path);
PointCloud import_ply(const std::string& path);

}  // namespace mv3d
