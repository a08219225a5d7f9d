#include "mv3d/mesh.hpp"

#include <algorithm>

#include "mv3d/rng.hpp"

namespace mv3d {

void TriMesh::aabb(Vec3& lo, Vec3& hi) const {
  lo = {1e30f, 1e30f, 1e30f};
  hi = {-1e30f, -1e30f, -1e30f};
  for (const Vec3& v : vertices) {
    lo.x = std::min(lo.x, v.x); lo.y = std::min(lo.y, v.y); lo.z = std::min(lo.z, v.z);
    hi.x = std::max(hi.x, v.x); hi.y = std::max(hi.y, v.y); hi.z = std::max(hi.z, v.z);
  }
}

namespace {

void add_quad(TriMesh& m, int a, int b, int c, int d) {
  m.triangles.push_back({a, b, c});
  m.triangles.push_back({a, c, d});
}

}  // namespace

void add_box(TriMesh& m, const Vec3& center, const Vec3& half, const Vec3& color) {
  const int base = static_cast<int>(m.vertices.size());
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back({center.x + ((i & 1) ? half.x : -half.x),
                          center.y + ((i & 2) ? half.y : -half.y),
                          center.z + ((i & 4) ? half.z : -half.z)});
    m.colors.push_back(color);
  }
  add_quad(m, base + 1, base + 3, base + 7, base + 5);  // +x
  add_quad(m, base + 0, base + 4, base + 6, base + 2);  // -x
  add_quad(m, base + 2, base + 6, base + 7, base + 3);  // +y
  add_quad(m, base + 0, base + 1, base + 5, base + 4);  // -y
  add_quad(m, base + 4, base + 5, base + 7, base + 6);  // +z
  add_quad(m, base + 0, base + 2, base + 3, base + 1);  // -z
}

void add_cylinder_y(TriMesh& m, const Vec3& center, float radius, float half_len, int segments,
                    const Vec3& color) {
  const int base = static_cast<int>(m.vertices.size());
  // ring 0 at y - half_len, ring 1 at y + half_len
  for (int ring = 0; ring < 2; ++ring) {
    const float y = center.y + (ring ? half_len : -half_len);
    for (int i = 0; i < segments; ++i) {
      const float a = 2.0f * kPi * static_cast<float>(i) / static_cast<float>(segments);
      m.vertices.push_back({center.x + radius * std::cos(a), y, center.z + radius * std::sin(a)});
      m.colors.push_back(color);
    }
  }
  const int cap0 = static_cast<int>(m.vertices.size());
  m.vertices.push_back({center.x, center.y - half_len, center.z});
  m.colors.push_back(color);
  const int cap1 = static_cast<int>(m.vertices.size());
  m.vertices.push_back({center.x, center.y + half_len, center.z});
  m.colors.push_back(color);

  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    add_quad(m, base + i, base + segments + i, base + segments + j, base + j);
    m.triangles.push_back({cap0, base + i, base + j});                          // -y cap
    m.triangles.push_back({cap1, base + segments + j, base + segments + i});    // +y cap
  }
}

TriMesh make_uv_sphere(float radius, int rings, int segments, const Vec3& color) {
  TriMesh m;
  for (int i = 0; i <= rings; ++i) {
    const float phi = kPi * static_cast<float>(i) / static_cast<float>(rings);
    for (int j = 0; j < segments; ++j) {
      const float theta = 2.0f * kPi * static_cast<float>(j) / static_cast<float>(segments);
      m.vertices.push_back({radius * std::sin(phi) * std::cos(theta),
                            radius * std::sin(phi) * std::sin(theta),
                            radius * std::cos(phi)});
      m.colors.push_back(color);
    }
  }
  auto idx = [segments](int i, int j) { return i * segments + (j % segments); };
  for (int i = 0; i < rings; ++i) {
    for (int j = 0; j < segments; ++j) {
      const int a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
      if (i > 0) m.triangles.push_back({a, b, c});
      if (i < rings - 1) m.triangles.push_back({a, c, d});
    }
  }
  return m;
}

namespace {

Vec3 random_color(SplitMix64& rng) {
  return {static_cast<float>(rng.uniform(0.1, 0.95)),
          static_cast<float>(rng.uniform(0.1, 0.95)),
          static_cast<float>(rng.uniform(0.1, 0.95))};
}

TriMesh gen_vehicle(SplitMix64& rng) {
  TriMesh m;
  // wide ranges on every visually strong dimension, so the family is not
  // trivially covered by a few hundred samples
  const float body_hl = static_cast<float>(rng.uniform(0.40, 0.62));
  const float body_hw = static_cast<float>(rng.uniform(0.13, 0.24));
  const float body_hh = static_cast<float>(rng.uniform(0.07, 0.16));
  const float cabin_hl = body_hl * static_cast<float>(rng.uniform(0.30, 0.65));
  const float cabin_hh = body_hh * static_cast<float>(rng.uniform(0.50, 1.30));
  const float cabin_dx = body_hl * static_cast<float>(rng.uniform(-0.35, 0.20));
  const float cabin_wf = static_cast<float>(rng.uniform(0.65, 0.95));
  const float wheel_r_front = static_cast<float>(rng.uniform(0.06, 0.13));
  const float wheel_r_rear = static_cast<float>(rng.uniform(0.06, 0.13));
  const float wheel_hw = static_cast<float>(rng.uniform(0.02, 0.05));
  const float max_r = std::max(wheel_r_front, wheel_r_rear);
  const float ride = max_r * static_cast<float>(rng.uniform(1.15, 1.80));
  const float wheel_inset = max_r * static_cast<float>(rng.uniform(1.10, 1.60));
  const Vec3 body_color = random_color(rng);
  const Vec3 cabin_color = random_color(rng);
  const float wheel_shade = static_cast<float>(rng.uniform(0.03, 0.35));
  const Vec3 wheel_color{wheel_shade, wheel_shade,
                         wheel_shade * static_cast<float>(rng.uniform(0.8, 1.2))};

  // assembled with wheel bottoms on z = 0
  const float body_z = ride + body_hh;
  add_box(m, {0, 0, body_z}, {body_hl, body_hw, body_hh}, body_color);
  add_box(m, {cabin_dx, 0, body_z + body_hh + cabin_hh},
          {cabin_hl, body_hw * cabin_wf, cabin_hh}, cabin_color);
  const float wx = body_hl - wheel_inset;
  for (int sx = -1; sx <= 1; sx += 2) {
    const float r = sx > 0 ? wheel_r_front : wheel_r_rear;
    for (int sy = -1; sy <= 1; sy += 2) {
      add_cylinder_y(m, {sx * wx, sy * body_hw, r}, r, wheel_hw, 12, wheel_color);
    }
  }
  return m;
}

TriMesh gen_chair(SplitMix64& rng) {
  TriMesh m;
  const float seat_hx = static_cast<float>(rng.uniform(0.14, 0.27));
  const float seat_hy = static_cast<float>(rng.uniform(0.14, 0.27));
  const float seat_ht = static_cast<float>(rng.uniform(0.015, 0.05));
  const float leg_h = static_cast<float>(rng.uniform(0.18, 0.36));
  const float leg_hw = static_cast<float>(rng.uniform(0.012, 0.036));
  const float back_h = static_cast<float>(rng.uniform(0.18, 0.42));
  const float back_ht = static_cast<float>(rng.uniform(0.015, 0.045));
  const Vec3 seat_color = random_color(rng);
  const Vec3 frame_color = random_color(rng);

  const float seat_z = leg_h + seat_ht;
  add_box(m, {0, 0, seat_z}, {seat_hx, seat_hy, seat_ht}, seat_color);
  // backrest on the -x side; chair faces +X
  add_box(m, {-seat_hx + back_ht, 0, seat_z + seat_ht + back_h / 2},
          {back_ht, seat_hy, back_h / 2}, seat_color);
  const float lx = seat_hx - leg_hw, ly = seat_hy - leg_hw;
  for (int sx = -1; sx <= 1; sx += 2) {
    for (int sy = -1; sy <= 1; sy += 2) {
      add_box(m, {sx * lx, sy * ly, leg_h / 2}, {leg_hw, leg_hw, leg_h / 2}, frame_color);
    }
  }
  return m;
}

}  // namespace

std::uint64_t object_seed(std::uint64_t master_seed, int object_index) {
  // distinct stream from per-sample seeds
  return derive_seed(master_seed ^ 0x6f626a65637421ull, static_cast<std::uint64_t>(object_index));
}

std::vector<TriMesh> generate_object_set(ObjectFamily family, int count,
                                         std::uint64_t master_seed) {
  std::vector<TriMesh> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(gen_object(family, object_seed(master_seed, i)));
  return out;
}

TriMesh gen_object(ObjectFamily family, std::uint64_t seed) {
  SplitMix64 rng(seed);
  TriMesh m = family == ObjectFamily::Vehicle ? gen_vehicle(rng) : gen_chair(rng);
  // recenter on the bounding-box center and scale to the radius-0.6 bound
  Vec3 lo, hi;
  m.aabb(lo, hi);
  const Vec3 center = (lo + hi) * 0.5f;
  float max_norm = 0;
  for (Vec3& v : m.vertices) {
    v = v - center;
    max_norm = std::max(max_norm, norm(v));
  }
  const float fill = static_cast<float>(rng.uniform(0.90, 1.0));
  const float s = 0.6f * fill / max_norm;
  for (Vec3& v : m.vertices) v = v * s;
  return m;
}

}  // namespace mv3d
