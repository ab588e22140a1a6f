#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>

namespace arbor {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

inline bool all_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

// Deterministic unit vector perpendicular to `dir` (unit). For +Z this is +X,
// which fixes azimuth 0 of a vertical axis.
inline Vec3 reference_perpendicular(const Vec3& dir) {
  const Vec3 ref = std::abs(dir.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return (ref - ref.dot(dir) * dir).normalized();
}

// Direction tilted `pitch_deg` away from `axis`, rotated `azimuth_deg`
// around it, measured from reference_perpendicular(axis).
inline Vec3 tilt_direction(const Vec3& axis, double azimuth_deg, double pitch_deg) {
  const Vec3 p = reference_perpendicular(axis);
  const Vec3 q = axis.cross(p);
  const double a = deg_to_rad(azimuth_deg);
  const double t = deg_to_rad(pitch_deg);
  const Vec3 d = std::cos(t) * axis + std::sin(t) * (std::cos(a) * p + std::sin(a) * q);
  return d.normalized();
}

// Axis-aligned bounds. Default-constructed bounds are the empty sentinel
// (min = +inf, max = -inf).
struct Bounds {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return min.x() > max.x(); }

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }

  void extend(const Bounds& other) {
    if (!other.empty()) {
      extend(other.min);
      extend(other.max);
    }
  }

  Vec3 extent() const { return empty() ? Vec3::Zero() : Vec3(max - min); }
};

}  // namespace arbor
