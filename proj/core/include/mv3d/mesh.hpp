#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mv3d/geometry.hpp"

namespace mv3d {

// Triangle mesh with per-vertex colors in [0,1]. Generated objects fit a
// sphere of radius 0.6 around the origin and share a canonical orientation
// (length along +X, up along +Z).
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;  // outward winding
  std::vector<Vec3> colors;

  void aabb(Vec3& lo, Vec3& hi) const;
};

enum class ObjectFamily { Vehicle, Chair };

// Deterministic procedural object: vehicle = body + cabin + 4 wheels,
// chair = seat + backrest + 4 legs. Dimensions and part colors come from the
// seeded generator.
TriMesh gen_object(ObjectFamily family, std::uint64_t seed);

// Object id -> mesh seed for a dataset derived from one master seed. Kept
// apart from the training-sample seed stream.
std::uint64_t object_seed(std::uint64_t master_seed, int object_index);

std::vector<TriMesh> generate_object_set(ObjectFamily family, int count, std::uint64_t master_seed);

// Building blocks (also used by test fixtures).
void add_box(TriMesh& mesh, const Vec3& center, const Vec3& half, const Vec3& color);
void add_cylinder_y(TriMesh& mesh, const Vec3& center, float radius, float half_len, int segments,
                    const Vec3& color);
TriMesh make_uv_sphere(float radius, int rings, int segments, const Vec3& color);

}  // namespace mv3d
