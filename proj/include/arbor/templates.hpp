#pragma once

// Procedural stand-ins for CAD-extracted tree parts. All templates are built
// in the local frame (base at origin, +Z growth, unit axis length).

#include "arbor/mesh_library.hpp"
#include "arbor/stl.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace arbor {

struct TubeShape {
  int sides = 8;
  int segments = 4;
  double base_radius = 0.03;
  double tip_radius = 0.01;
  double bow = 0.0;  // lateral sag of the centerline at mid-length, along +X
};

// Tapered tube with horizontal cross-sections, capped at both ends. The
// centerline x(s) = 4·bow·s(1-s) keeps base and tip on the z axis; the base
// ring is centered on the origin.
inline TriangleMesh make_tube(const TubeShape& shape) {
  TriangleMesh mesh;
  const int n = shape.sides;
  auto ring_point = [&](int seg, int k) {
    const double s = static_cast<double>(seg) / shape.segments;
    const double r = shape.base_radius + (shape.tip_radius - shape.base_radius) * s;
    const double phi = 2.0 * std::numbers::pi * k / n;
    return Vec3(4.0 * shape.bow * s * (1.0 - s) + r * std::cos(phi), r * std::sin(phi), s);
  };
  auto add = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
    Triangle t;
    t.v = {a, b, c};
    mesh.triangles.push_back(t);
  };
  for (int seg = 0; seg < shape.segments; ++seg) {
    for (int k = 0; k < n; ++k) {
      const Vec3 a = ring_point(seg, k);
      const Vec3 b = ring_point(seg, (k + 1) % n);
      const Vec3 c = ring_point(seg + 1, (k + 1) % n);
      const Vec3 d = ring_point(seg + 1, k);
      add(a, b, c);
      add(a, c, d);
    }
  }
  const Vec3 bottom = Vec3::Zero();
  const Vec3 top(0.0, 0.0, 1.0);
  for (int k = 0; k < n; ++k) {
    add(bottom, ring_point(0, (k + 1) % n), ring_point(0, k));
    add(top, ring_point(shape.segments, k), ring_point(shape.segments, (k + 1) % n));
  }
  return recompute_normals(std::move(mesh)).mesh;
}

// Two-triangle lanceolate leaf in the XZ plane.
inline TriangleMesh make_leaf(double half_width = 0.3) {
  TriangleMesh mesh;
  const Vec3 base = Vec3::Zero();
  const Vec3 tip(0.0, 0.0, 1.0);
  Triangle a;
  a.v = {base, Vec3(half_width, 0.0, 0.45), tip};
  Triangle b;
  b.v = {base, tip, Vec3(-half_width, 0.0, 0.45)};
  mesh.triangles = {a, b};
  return recompute_normals(std::move(mesh)).mesh;
}

inline MeshLibrary builtin_mesh_library() {
  MeshLibrary lib;
  auto named = [](TriangleMesh m, const char* name) {
    m.name = name;
    return MeshTemplate::from_local(std::move(m));
  };
  lib.trunk = named(make_tube({12, 6, 0.045, 0.012, 0.0}), "trunk");
  lib.branch = named(make_tube({8, 6, 0.035, 0.008, 0.06}), "branch");
  lib.sub_branch = named(make_tube({6, 4, 0.04, 0.01, 0.05}), "sub_branch");
  lib.leaf = named(make_leaf(), "leaf");
  return lib;
}

}  // namespace arbor
