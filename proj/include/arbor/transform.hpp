#pragma once

#include "arbor/error.hpp"
#include "arbor/geometry.hpp"
#include "arbor/rng.hpp"
#include "arbor/stl.hpp"

#include <cmath>

namespace arbor {

// p -> scale * rotation * p + translation
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  static RigidTransform identity() { return {}; }

  static RigidTransform translate(const Vec3& t) { return {Mat3::Identity(), t, 1.0}; }

  Vec3 apply_point(const Vec3& p) const { return scale * (rotation * p) + translation; }
  Vec3 apply_direction(const Vec3& d) const { return rotation * d; }

  RigidTransform inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation) / scale, 1.0 / scale};
  }

  bool operator==(const RigidTransform& o) const {
    return rotation == o.rotation && translation == o.translation && scale == o.scale;
  }
};

// apply_point(compose(a, b), p) == a.apply_point(b.apply_point(p))
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.scale * (a.rotation * b.translation) + a.translation,
          a.scale * b.scale};
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

inline Mat3 axis_angle(const Vec3& unit_axis, double radians) {
  return Eigen::AngleAxisd(radians, unit_axis).toRotationMatrix();
}

// Minimal rotation taking +Z onto `dir` (unit). The antipodal case uses a
// half turn about +X.
inline Mat3 align_z_to(const Vec3& dir) {
  const Vec3 z = Vec3::UnitZ();
  const Vec3 axis = z.cross(dir);
  const double s = axis.norm();
  const double c = z.dot(dir);
  if (s < 1e-15) {
    if (c > 0.0) return Mat3::Identity();
    return Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
  }
  return axis_angle(axis / s, std::atan2(s, c));
}

inline TriangleMesh apply_to_mesh(const RigidTransform& t, TriangleMesh mesh) {
  for (auto& tri : mesh.triangles) {
    for (auto& p : tri.v) p = t.apply_point(p);
    const Vec3 n = t.rotation * tri.normal;
    const double len = n.norm();
    tri.normal = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  }
  return mesh;
}

// Translation only; normals are copied untouched.
inline TriangleMesh translated(TriangleMesh mesh, const Vec3& offset) {
  for (auto& tri : mesh.triangles) {
    for (auto& p : tri.v) p += offset;
  }
  return mesh;
}

struct AngleJitterParams {
  double azimuth_range = 0.0;  // degrees, spin about the template axis
  double pitch_range = 0.0;    // degrees, tilt off the target direction
  double scale_min = 1.0;
  double scale_max = 1.0;

  void validate() const {
    if (!(azimuth_range >= 0.0) || !(pitch_range >= 0.0) || !std::isfinite(azimuth_range) ||
        !std::isfinite(pitch_range)) {
      throw ValidationError("jitter ranges must be non-negative");
    }
    if (!(scale_min > 0.0) || !(scale_min <= scale_max) || !std::isfinite(scale_max)) {
      throw ValidationError("scale range must satisfy 0 < min <= max");
    }
  }

  bool operator==(const AngleJitterParams&) const = default;
};

struct Frame {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

// Places a template (base at origin, growth axis +Z) at `frame`: spin about
// its own axis by azimuth ~ U(-a, a), align +Z to the frame direction, tilt
// by pitch ~ U(-p, p) about reference_perpendicular(direction), then scale
// ~ U(scale_min, scale_max). Always consumes three draws, in that order
// (pitch, azimuth, scale).
inline RigidTransform random_attachment_transform(const Frame& frame,
                                                  const AngleJitterParams& jitter, Rng& rng) {
  jitter.validate();
  const double pitch = uniform(rng, -jitter.pitch_range, jitter.pitch_range);
  const double azimuth = uniform(rng, -jitter.azimuth_range, jitter.azimuth_range);
  const double scale = uniform(rng, jitter.scale_min, jitter.scale_max);

  Mat3 r = align_z_to(frame.direction);
  if (azimuth != 0.0) r = r * axis_angle(Vec3::UnitZ(), deg_to_rad(azimuth));
  if (pitch != 0.0) r = axis_angle(reference_perpendicular(frame.direction), deg_to_rad(pitch)) * r;
  return {r, frame.point, scale};
}

}  // namespace arbor
