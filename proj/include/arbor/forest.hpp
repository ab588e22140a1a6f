#pragma once

// Forest scenes: tree locations from an inhomogeneous Poisson process (plus
// an optional hard-core spacing filter), one independently seeded tree per
// location, exported as STL with a JSON manifest.
//
// Seeds: locations use derive_seed(master_seed, kLocationStream); tree i uses
// derive_seed(master_seed, i); tree i's parameter jitter draws from
// derive_seed(tree_seed, kParameterStream).

#include "arbor/error.hpp"
#include "arbor/ipp.hpp"
#include "arbor/json_io.hpp"
#include "arbor/mesh_library.hpp"
#include "arbor/rng.hpp"
#include "arbor/stl.hpp"
#include "arbor/templates.hpp"
#include "arbor/transform.hpp"
#include "arbor/tree.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace arbor {

inline constexpr std::uint64_t kLocationStream = ~std::uint64_t{0};
inline constexpr std::uint64_t kParameterStream = 0x7061726dULL;
inline constexpr int kManifestVersion = 1;

struct ParameterJitter {
  std::optional<std::pair<int, int>> branch_count;        // closed range
  std::optional<std::pair<double, double>> trunk_height;  // [min, max)

  bool operator==(const ParameterJitter&) const = default;
};

struct SceneConfig {
  Region region{0.0, 100.0, 0.0, 100.0};
  IntensityField intensity = IntensityField::constant(0.0);
  TreeParams tree_params;  // per-tree seed is derived, the template's is ignored
  ParameterJitter parameter_jitter;
  double min_spacing = 0.0;
  std::uint64_t master_seed = 0;

  void validate() const {
    region.validate();
    intensity.validate();
    intensity.require_covers(region);
    tree_params.validate();
    if (!(min_spacing >= 0.0) || !std::isfinite(min_spacing)) {
      throw ValidationError("min_spacing must be finite and >= 0");
    }
    if (const auto& b = parameter_jitter.branch_count; b && (b->first < 1 || b->first > b->second)) {
      throw ValidationError("branch_count jitter must satisfy 1 <= min <= max");
    }
    if (const auto& h = parameter_jitter.trunk_height;
        h && (!(h->first > 0.0) || !(h->first <= h->second) || !std::isfinite(h->second))) {
      throw ValidationError("trunk_height jitter must satisfy 0 < min <= max");
    }
  }

  bool operator==(const SceneConfig&) const = default;
};

struct Placement {
  std::size_t index = 0;
  double x = 0.0;
  double y = 0.0;
  std::uint64_t seed = 0;
  TreeModel tree;  // local frame, base at the origin

  Vec3 offset() const { return {x, y, 0.0}; }
};

struct Scene {
  SceneConfig config;
  std::vector<Placement> placements;
};

inline TreeParams tree_params_for(const SceneConfig& config, std::uint64_t tree_seed) {
  TreeParams p = config.tree_params;
  p.seed = tree_seed;
  Rng rng(derive_seed(tree_seed, kParameterStream));
  if (const auto& b = config.parameter_jitter.branch_count) {
    p.branch_count = static_cast<int>(uniform_int(rng, b->first, b->second));
  }
  if (const auto& h = config.parameter_jitter.trunk_height) {
    p.trunk_height = uniform(rng, h->first, h->second);
  }
  return p;
}

inline PointPattern sample_tree_locations(const SceneConfig& config) {
  const PointPattern raw = sample_ipp_thinning(config.intensity, config.region,
                                               derive_seed(config.master_seed, kLocationStream));
  return min_distance_filter(raw, config.min_spacing);
}

// threads = 0 uses the hardware concurrency.
inline Scene compose_forest(const SceneConfig& config, const MeshLibrary& lib, unsigned threads = 0) {
  config.validate();
  lib.validate();
  const PointPattern locations = sample_tree_locations(config);

  Scene scene;
  scene.config = config;
  scene.placements.resize(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    Placement& p = scene.placements[i];
    p.index = i;
    p.x = locations.points[i].x;
    p.y = locations.points[i].y;
    p.seed = derive_seed(config.master_seed, i);
  }

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, scene.placements.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < scene.placements.size(); i = next++) {
      try {
        Placement& p = scene.placements[i];
        p.tree = build_tree(tree_params_for(config, p.seed), lib);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  return scene;
}

// Mesh of one placed tree in world coordinates.
inline TriangleMesh placed_tree_mesh(const Placement& p, Stage stage) {
  TriangleMesh m = translated(stage_mesh(p.tree, stage), p.offset());
  m.name = "tree_" + std::to_string(p.index);
  return m;
}

struct SceneStats {
  std::size_t tree_count = 0;
  std::size_t total_triangles = 0;
  Bounds bounds;
  double nearest_neighbor_min_distance = std::numeric_limits<double>::infinity();
};

inline SceneStats scene_stats(const Scene& scene, Stage stage = Stage::leaves) {
  SceneStats s;
  s.tree_count = scene.placements.size();
  for (const auto& p : scene.placements) {
    const MeshStats ms = mesh_stats(placed_tree_mesh(p, stage));
    s.total_triangles += ms.triangle_count;
    s.bounds.extend(ms.bounds);
  }
  for (std::size_t i = 0; i < scene.placements.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.placements.size(); ++j) {
      const double d = std::hypot(scene.placements[i].x - scene.placements[j].x,
                                  scene.placements[i].y - scene.placements[j].y);
      s.nearest_neighbor_min_distance = std::min(s.nearest_neighbor_min_distance, d);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Configuration and manifest

enum class ExportMode { merged, per_tree };

inline std::string_view mode_name(ExportMode m) { return m == ExportMode::merged ? "merged" : "per-tree"; }

struct ExportOptions {
  ExportMode mode = ExportMode::per_tree;
  StlFormat format = StlFormat::binary;
  Stage stage = Stage::leaves;
  std::string library = "builtin";  // recorded for regeneration
};

inline constexpr const char* kMergedFileName = "forest.stl";
inline constexpr const char* kManifestFileName = "scene.json";

inline json scene_config_to_json(const SceneConfig& c) {
  json j{{"version", kManifestVersion},
         {"master_seed", c.master_seed},
         {"region", to_json(c.region)},
         {"intensity", to_json(c.intensity)},
         {"min_spacing", c.min_spacing},
         {"tree_params", to_json(c.tree_params)}};
  json pj = json::object();
  if (const auto& b = c.parameter_jitter.branch_count) pj["branch_count"] = {b->first, b->second};
  if (const auto& h = c.parameter_jitter.trunk_height) pj["trunk_height"] = {h->first, h->second};
  j["parameter_jitter"] = pj;
  return j;
}

inline SceneConfig scene_config_from_json(const json& j) {
  try {
    if (j.contains("version") && j.at("version").get<int>() != kManifestVersion) {
      throw ValidationError("unsupported scene version " + j.at("version").dump());
    }
    SceneConfig c;
    c.region = region_from_json(j.at("region"));
    c.intensity = intensity_from_json(j.at("intensity"), &c.region);
    if (j.contains("tree_params")) c.tree_params = tree_params_from_json(j.at("tree_params"));
    c.min_spacing = j.value("min_spacing", 0.0);
    c.master_seed = j.value("master_seed", std::uint64_t{0});
    if (j.contains("parameter_jitter")) {
      const auto& pj = j.at("parameter_jitter");
      if (pj.contains("branch_count")) {
        const auto& b = pj.at("branch_count");
        c.parameter_jitter.branch_count = std::pair{b.at(0).get<int>(), b.at(1).get<int>()};
      }
      if (pj.contains("trunk_height")) {
        const auto& h = pj.at("trunk_height");
        c.parameter_jitter.trunk_height = std::pair{h.at(0).get<double>(), h.at(1).get<double>()};
      }
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scene config: ") + e.what());
  }
}

inline ExportOptions export_options_from_json(const json& j) {
  ExportOptions o;
  const std::string mode = j.value("mode", std::string(mode_name(o.mode)));
  if (mode == "merged") {
    o.mode = ExportMode::merged;
  } else if (mode == "per-tree") {
    o.mode = ExportMode::per_tree;
  } else {
    throw ValidationError("unknown export mode '" + mode + "'");
  }
  const std::string format = j.value("format", std::string("binary"));
  if (format != "binary" && format != "ascii") throw ValidationError("unknown format '" + format + "'");
  o.format = format == "binary" ? StlFormat::binary : StlFormat::ascii;
  const auto stage = parse_stage(j.value("stage", std::string("leaves")));
  if (!stage) throw ValidationError("unknown stage");
  o.stage = *stage;
  o.library = j.value("library", std::string("builtin"));
  return o;
}

// "builtin" or a library manifest path (relative paths resolve against
// `base_dir`).
inline MeshLibrary load_library(const std::string& source, const std::filesystem::path& base_dir = {}) {
  if (source == "builtin") return builtin_mesh_library();
  std::filesystem::path p(source);
  if (p.is_relative()) p = base_dir / p;
  return load_mesh_library(p);
}

// Writes the scene under `dir` and returns the manifest, which is also
// written to `dir/scene.json`.
inline json export_scene(const Scene& scene, const std::filesystem::path& dir, const ExportOptions& opt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }

  json manifest = scene_config_to_json(scene.config);
  manifest["library"] = opt.library;
  manifest["mode"] = mode_name(opt.mode);
  manifest["format"] = format_name(opt.format);
  manifest["stage"] = stage_name(opt.stage);

  TriangleMesh merged{"forest", {}};
  json trees = json::array();
  std::size_t total = 0;
  for (const auto& p : scene.placements) {
    const TriangleMesh mesh = placed_tree_mesh(p, opt.stage);
    std::string file;
    if (opt.mode == ExportMode::per_tree) {
      file = "tree_" + std::to_string(p.index) + ".stl";
      write_stl_file(dir / file, mesh, opt.format);
    } else {
      file = kMergedFileName;
      merged.append(mesh);
    }
    total += mesh.size();
    trees.push_back({{"index", p.index},
                     {"x", p.x},
                     {"y", p.y},
                     {"seed", p.seed},
                     {"params", to_json(p.tree.params)},
                     {"file", file},
                     {"triangles", mesh.size()}});
  }
  if (opt.mode == ExportMode::merged && !scene.placements.empty()) {
    write_stl_file(dir / kMergedFileName, merged, opt.format);
  }
  manifest["trees"] = std::move(trees);
  manifest["tree_count"] = scene.placements.size();
  manifest["total_triangles"] = total;
  write_file_bytes(dir / kManifestFileName, manifest.dump(2) + "\n");
  return manifest;
}

// Rebuilds and re-exports a scene from a manifest written by export_scene.
inline json regenerate_scene(const std::filesystem::path& manifest_path,
                             const std::filesystem::path& out_dir, unsigned threads = 0) {
  json manifest;
  try {
    manifest = json::parse(read_file_bytes(manifest_path));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  const SceneConfig config = scene_config_from_json(manifest);
  const ExportOptions opt = export_options_from_json(manifest);
  const MeshLibrary lib = load_library(opt.library, manifest_path.parent_path());
  return export_scene(compose_forest(config, lib, threads), out_dir, opt);
}

}  // namespace arbor
