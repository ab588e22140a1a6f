#pragma once

// JSON forms of the configuration types. Readers accept missing optional
// fields (defaults apply) and report malformed documents as ValidationError.

#include "arbor/error.hpp"
#include "arbor/ipp.hpp"
#include "arbor/stl.hpp"
#include "arbor/transform.hpp"
#include "arbor/tree.hpp"

#include <json.hpp>

#include <string>

namespace arbor {

using nlohmann::json;

inline json to_json(const Region& r) {
  return {{"x_min", r.x_min}, {"x_max", r.x_max}, {"y_min", r.y_min}, {"y_max", r.y_max}};
}

inline Region region_from_json(const json& j) {
  Region r;
  if (j.is_array()) {
    if (j.size() != 4) throw ValidationError("region array must be [x_min, x_max, y_min, y_max]");
    r = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  } else {
    r = {j.at("x_min").get<double>(), j.at("x_max").get<double>(), j.at("y_min").get<double>(),
         j.at("y_max").get<double>()};
  }
  r.validate();
  return r;
}

// {"type": "constant", "value": v}            intensity per unit area
// {"type": "constant", "expected_count": N}   value = N / |region|
// {"type": "raster", "extent": {...}, "cell_size": s | [w, h], "values": [...]}
//   values are flat row-major or nested rows, row 0 along y_min
// A bare raster document (no "type") is accepted, with "region" as an alias
// of "extent".
inline json to_json(const IntensityField& f) {
  if (const auto* c = std::get_if<ConstantIntensity>(&f.form())) {
    return {{"type", "constant"}, {"value", c->value}};
  }
  const auto& r = std::get<RasterIntensity>(f.form());
  return {{"type", "raster"},
          {"extent", to_json(r.extent)},
          {"cell_size", {r.cell_width, r.cell_height}},
          {"rows", r.rows},
          {"cols", r.cols},
          {"values", r.values}};
}

inline IntensityField intensity_from_json(const json& j, const Region* region = nullptr) {
  const std::string type = j.value("type", j.contains("values") ? "raster" : "constant");
  if (type == "constant") {
    if (j.contains("expected_count")) {
      if (!region) throw ValidationError("expected_count needs a region");
      return IntensityField::constant(j.at("expected_count").get<double>() / region->area());
    }
    return IntensityField::constant(j.at("value").get<double>());
  }
  if (type != "raster") throw ValidationError("unknown intensity type '" + type + "'");
  const Region extent = region_from_json(j.contains("extent") ? j.at("extent") : j.at("region"));
  double w = 0.0;
  double h = 0.0;
  const auto& cs = j.at("cell_size");
  if (cs.is_array()) {
    if (cs.size() != 2) throw ValidationError("cell_size must be a number or [width, height]");
    w = cs[0].get<double>();
    h = cs[1].get<double>();
  } else {
    w = h = cs.get<double>();
  }
  std::vector<double> values;
  for (const auto& v : j.at("values")) {
    if (v.is_array()) {
      for (const auto& x : v) values.push_back(x.get<double>());
    } else {
      values.push_back(v.get<double>());
    }
  }
  IntensityField f = IntensityField::raster(extent, w, h, std::move(values));
  const auto& r = std::get<RasterIntensity>(f.form());
  if ((j.contains("rows") && j.at("rows").get<std::size_t>() != r.rows) ||
      (j.contains("cols") && j.at("cols").get<std::size_t>() != r.cols)) {
    throw ValidationError("raster rows/cols disagree with extent and cell size");
  }
  return f;
}

inline json to_json(const AngleJitterParams& p) {
  return {{"azimuth_range", p.azimuth_range},
          {"pitch_range", p.pitch_range},
          {"scale_range", {p.scale_min, p.scale_max}}};
}

inline AngleJitterParams jitter_from_json(const json& j) {
  AngleJitterParams p;
  p.azimuth_range = j.value("azimuth_range", p.azimuth_range);
  p.pitch_range = j.value("pitch_range", p.pitch_range);
  if (j.contains("scale_range")) {
    const auto& s = j.at("scale_range");
    if (!s.is_array() || s.size() != 2) throw ValidationError("scale_range must be [min, max]");
    p.scale_min = s[0].get<double>();
    p.scale_max = s[1].get<double>();
  }
  p.validate();
  return p;
}

inline json to_json(const TreeParams& p) {
  return {{"branch_count", p.branch_count},
          {"subbranches_per_branch", p.subbranches_per_branch},
          {"leaves_per_subbranch", p.leaves_per_subbranch},
          {"trunk_height", p.trunk_height},
          {"branch_pitch", p.branch_pitch},
          {"jitter", to_json(p.jitter)},
          {"depth_scale_decay", p.depth_scale_decay},
          {"seed", p.seed}};
}

inline TreeParams tree_params_from_json(const json& j) {
  TreeParams p;
  p.branch_count = j.value("branch_count", p.branch_count);
  p.subbranches_per_branch = j.value("subbranches_per_branch", p.subbranches_per_branch);
  p.leaves_per_subbranch = j.value("leaves_per_subbranch", p.leaves_per_subbranch);
  p.trunk_height = j.value("trunk_height", p.trunk_height);
  p.branch_pitch = j.value("branch_pitch", p.branch_pitch);
  if (j.contains("jitter")) p.jitter = jitter_from_json(j.at("jitter"));
  p.depth_scale_decay = j.value("depth_scale_decay", p.depth_scale_decay);
  p.seed = j.value("seed", p.seed);
  p.validate();
  return p;
}

inline std::string_view format_name(StlFormat f) { return f == StlFormat::binary ? "binary" : "ascii"; }

}  // namespace arbor
