#pragma once

// Planar inhomogeneous Poisson processes sampled by thinning: draw a
// homogeneous pattern at the intensity supremum, then keep each point with
// probability lambda(s) / lambda_max.

#include "arbor/error.hpp"
#include "arbor/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace arbor {

struct Region {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  void validate() const {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) ||
        !std::isfinite(y_max) || !(x_min < x_max) || !(y_min < y_max)) {
      throw ValidationError("region must satisfy x_min < x_max and y_min < y_max");
    }
  }

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }

  bool operator==(const Region&) const = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

struct PointPattern {
  std::vector<Point2> points;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
  bool operator==(const PointPattern&) const = default;
};

struct ConstantIntensity {
  double value = 0.0;

  bool operator==(const ConstantIntensity&) const = default;
};

// Piecewise-constant raster covering `extent`. values are row-major with row
// 0 along y_min; cell (row, col) spans
// [x_min + col*cell_width, +cell_width] x [y_min + row*cell_height, +cell_height].
struct RasterIntensity {
  Region extent;
  double cell_width = 1.0;
  double cell_height = 1.0;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<double> values;

  double at(std::size_t row, std::size_t col) const { return values[row * cols + col]; }

  bool operator==(const RasterIntensity&) const = default;
};

class IntensityField {
 public:
  using Form = std::variant<ConstantIntensity, RasterIntensity>;

  IntensityField() : form_(ConstantIntensity{}) {}

  static IntensityField constant(double value) {
    IntensityField f;
    f.form_ = ConstantIntensity{value};
    f.validate();
    return f;
  }

  // cols/rows derive from extent and cell size, which must tile it exactly.
  static IntensityField raster(const Region& extent, double cell_width, double cell_height,
                               std::vector<double> values) {
    extent.validate();
    if (!(cell_width > 0.0) || !(cell_height > 0.0)) {
      throw ValidationError("raster cell size must be positive");
    }
    auto tiles = [](double span, double cell) {
      const double n = std::round(span / cell);
      if (n < 1.0 || std::abs(n * cell - span) > 1e-9 * span) {
        throw ValidationError("raster cell size does not tile the raster extent");
      }
      return static_cast<std::size_t>(n);
    };
    RasterIntensity r{extent, cell_width, cell_height, tiles(extent.width(), cell_width),
                      tiles(extent.height(), cell_height), std::move(values)};
    if (r.values.size() != r.rows * r.cols) {
      throw ValidationError("raster has " + std::to_string(r.values.size()) + " values, expected " +
                            std::to_string(r.rows) + " x " + std::to_string(r.cols));
    }
    IntensityField f;
    f.form_ = std::move(r);
    f.validate();
    return f;
  }

  const Form& form() const { return form_; }
  bool is_constant() const { return std::holds_alternative<ConstantIntensity>(form_); }

  void validate() const {
    if (const auto* c = std::get_if<ConstantIntensity>(&form_)) {
      if (!(c->value >= 0.0) || !std::isfinite(c->value)) {
        throw ValidationError("constant intensity must be finite and >= 0");
      }
      return;
    }
    const auto& r = std::get<RasterIntensity>(form_);
    for (std::size_t row = 0; row < r.rows; ++row) {
      for (std::size_t col = 0; col < r.cols; ++col) {
        const double v = r.at(row, col);
        if (!(v >= 0.0) || !std::isfinite(v)) {
          char buf[160];
          std::snprintf(buf, sizeof buf,
                        "raster cell (row %zu, col %zu) has invalid intensity %g", row, col, v);
          throw ValidationError(buf);
        }
      }
    }
  }

  // Piecewise-constant lookup; points on the far raster edge map to the last
  // cell.
  double value_at(double x, double y) const {
    if (const auto* c = std::get_if<ConstantIntensity>(&form_)) return c->value;
    const auto& r = std::get<RasterIntensity>(form_);
    const auto col = cell_index(x - r.extent.x_min, r.cell_width, r.cols);
    const auto row = cell_index(y - r.extent.y_min, r.cell_height, r.rows);
    return r.at(row, col);
  }

  void require_covers(const Region& region) const {
    const auto* r = std::get_if<RasterIntensity>(&form_);
    if (!r) return;
    const double tol = 1e-12 * std::max({1.0, std::abs(r->extent.x_max), std::abs(r->extent.x_min),
                                         std::abs(r->extent.y_max), std::abs(r->extent.y_min)});
    if (region.x_min < r->extent.x_min - tol || region.x_max > r->extent.x_max + tol ||
        region.y_min < r->extent.y_min - tol || region.y_max > r->extent.y_max + tol) {
      throw ValidationError("intensity raster does not cover the sampling region");
    }
  }

  // Supremum of lambda over the closed region: the largest cell touching it.
  double max_over(const Region& region) const {
    require_covers(region);
    if (const auto* c = std::get_if<ConstantIntensity>(&form_)) return c->value;
    const auto& r = std::get<RasterIntensity>(form_);
    double best = 0.0;
    for_each_cell(r, region, [&](std::size_t row, std::size_t col, double, double) {
      best = std::max(best, r.at(row, col));
    });
    return best;
  }

  template <typename Fn>
  static void for_each_cell(const RasterIntensity& r, const Region& region, Fn&& fn) {
    for (std::size_t row = 0; row < r.rows; ++row) {
      const double y0 = r.extent.y_min + static_cast<double>(row) * r.cell_height;
      const double oy = std::min(y0 + r.cell_height, region.y_max) - std::max(y0, region.y_min);
      if (oy < 0.0) continue;
      for (std::size_t col = 0; col < r.cols; ++col) {
        const double x0 = r.extent.x_min + static_cast<double>(col) * r.cell_width;
        const double ox = std::min(x0 + r.cell_width, region.x_max) - std::max(x0, region.x_min);
        if (ox < 0.0) continue;
        fn(row, col, ox, oy);
      }
    }
  }

  bool operator==(const IntensityField&) const = default;

 private:
  static std::size_t cell_index(double offset, double cell, std::size_t n) {
    const double k = std::floor(offset / cell);
    if (!(k > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(k), n - 1);
  }

  Form form_;
};

// Expected point count over the region.
inline double integrate_intensity(const IntensityField& field, const Region& region) {
  region.validate();
  field.require_covers(region);
  if (const auto* c = std::get_if<ConstantIntensity>(&field.form())) return c->value * region.area();
  const auto& r = std::get<RasterIntensity>(field.form());
  double total = 0.0;
  IntensityField::for_each_cell(r, region, [&](std::size_t row, std::size_t col, double ox, double oy) {
    total += r.at(row, col) * ox * oy;
  });
  return total;
}

// Poisson(mean) by CDF inversion below 30 and by counting unit-rate
// exponential arrivals in [0, mean] otherwise. Both are exact.
inline std::uint64_t poisson_count(Rng& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ValidationError("Poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    const double u = uniform01(rng);
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  std::uint64_t k = 0;
  double t = 0.0;
  for (;;) {
    t -= std::log1p(-uniform01(rng));
    if (t > mean) return k;
    ++k;
  }
}

inline PointPattern sample_homogeneous(const Region& region, double rate, Rng& rng) {
  region.validate();
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw ValidationError("rate must be finite and >= 0");
  PointPattern out;
  const std::uint64_t n = poisson_count(rng, rate * region.area());
  out.points.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = uniform(rng, region.x_min, region.x_max);
    const double y = uniform(rng, region.y_min, region.y_max);
    out.points.push_back({x, y});
  }
  return out;
}

inline PointPattern sample_homogeneous(const Region& region, double rate, std::uint64_t seed) {
  Rng rng(seed);
  PointPattern p = sample_homogeneous(region, rate, rng);
  p.seed = seed;
  return p;
}

// Retains each envelope point with probability lambda(s) / lambda_max; one
// uniform draw per envelope point, in order.
inline PointPattern thin(const PointPattern& envelope, const IntensityField& field,
                         double lambda_max, Rng& rng) {
  PointPattern out;
  out.seed = envelope.seed;
  for (const auto& p : envelope.points) {
    const double u = uniform01(rng);
    if (u * lambda_max < field.value_at(p.x, p.y)) out.points.push_back(p);
  }
  return out;
}

// The whole homogeneous envelope is drawn before any acceptance draw, so a
// constant field reproduces sample_homogeneous on the same stream.
inline PointPattern sample_ipp_thinning(const IntensityField& field, const Region& region, Rng& rng) {
  region.validate();
  const double lambda_max = field.max_over(region);
  if (lambda_max == 0.0) return {};
  const PointPattern envelope = sample_homogeneous(region, lambda_max, rng);
  return thin(envelope, field, lambda_max, rng);
}

inline PointPattern sample_ipp_thinning(const IntensityField& field, const Region& region,
                                        std::uint64_t seed) {
  Rng rng(seed);
  PointPattern p = sample_ipp_thinning(field, region, rng);
  p.seed = seed;
  return p;
}

// Greedy sequential hard-core filter in generation order.
inline PointPattern min_distance_filter(const PointPattern& pattern, double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("minimum distance must be finite and >= 0");
  if (r == 0.0) return pattern;
  PointPattern out;
  out.seed = pattern.seed;
  const double r2 = r * r;
  for (const auto& p : pattern.points) {
    const bool clear = std::none_of(out.points.begin(), out.points.end(), [&](const Point2& q) {
      const double dx = p.x - q.x;
      const double dy = p.y - q.y;
      return dx * dx + dy * dy < r2;
    });
    if (clear) out.points.push_back(p);
  }
  return out;
}

inline std::string pattern_csv(const PointPattern& pattern) {
  std::string out = "x,y\n";
  char buf[64];
  for (const auto& p : pattern.points) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", p.x, p.y);
    out += buf;
  }
  return out;
}

}  // namespace arbor
