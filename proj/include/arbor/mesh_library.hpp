#pragma once

// The set of template meshes a tree is assembled from. Each template lives in
// a local frame: attachment base at the origin, growth axis along +Z. Library
// manifests declare where each source file's origin and axis are; loading
// moves the geometry into the local frame.
//
// Manifest (JSON):
//   { "version": 1,
//     "templates": {
//       "trunk":      { "file": "trunk.stl", "origin": [0,0,0], "axis": [0,0,1] },
//       "branch":     { ... }, "sub_branch": { ... }, "leaf": { ... } } }
// File paths are relative to the manifest. origin/axis default to 0 and +Z.

#include "arbor/error.hpp"
#include "arbor/stl.hpp"
#include "arbor/transform.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

namespace arbor {

struct MeshTemplate {
  TriangleMesh mesh;         // in the local frame
  double axis_length = 0.0;  // highest z of the local mesh

  static MeshTemplate from_local(TriangleMesh mesh) {
    MeshTemplate t;
    const MeshStats s = mesh_stats(mesh);
    t.axis_length = s.bounds.empty() ? 0.0 : s.bounds.max.z();
    t.mesh = std::move(mesh);
    return t;
  }

  // Base at `origin`, growth along `axis` in the source coordinates.
  static MeshTemplate from_source(const TriangleMesh& mesh, const Vec3& origin, const Vec3& axis) {
    if (!(axis.norm() > 0.0) || !all_finite(axis) || !all_finite(origin)) {
      throw ValidationError("template axis must be a finite non-zero vector");
    }
    const Mat3 to_local = align_z_to(axis.normalized()).transpose();
    const RigidTransform t{to_local, -(to_local * origin), 1.0};
    return from_local(apply_to_mesh(t, mesh));
  }
};

enum class TemplateRole { trunk, branch, sub_branch, leaf };

inline constexpr std::array<TemplateRole, 4> kTemplateRoles{
    TemplateRole::trunk, TemplateRole::branch, TemplateRole::sub_branch, TemplateRole::leaf};

inline std::string_view role_name(TemplateRole r) {
  switch (r) {
    case TemplateRole::trunk: return "trunk";
    case TemplateRole::branch: return "branch";
    case TemplateRole::sub_branch: return "sub_branch";
    case TemplateRole::leaf: return "leaf";
  }
  return "";
}

struct MeshLibrary {
  MeshTemplate trunk;
  MeshTemplate branch;
  MeshTemplate sub_branch;
  MeshTemplate leaf;

  const MeshTemplate& get(TemplateRole r) const {
    switch (r) {
      case TemplateRole::trunk: return trunk;
      case TemplateRole::branch: return branch;
      case TemplateRole::sub_branch: return sub_branch;
      case TemplateRole::leaf: return leaf;
    }
    return trunk;
  }

  MeshTemplate& get(TemplateRole r) {
    return const_cast<MeshTemplate&>(static_cast<const MeshLibrary&>(*this).get(r));
  }

  void validate() const {
    for (TemplateRole r : kTemplateRoles) {
      const MeshTemplate& t = get(r);
      if (t.mesh.empty()) {
        throw ValidationError("template '" + std::string(role_name(r)) + "' is empty");
      }
      if (!(t.axis_length > 0.0)) {
        throw ValidationError("template '" + std::string(role_name(r)) +
                              "' has no extent along its growth axis");
      }
    }
  }
};

namespace detail {

inline Vec3 json_vec3(const nlohmann::json& j, const Vec3& fallback) {
  if (j.is_null()) return fallback;
  if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

inline MeshLibrary load_mesh_library(const std::filesystem::path& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("library manifest " + manifest_path.string() + ": " + e.what());
  }
  const auto dir = manifest_path.parent_path();
  MeshLibrary lib;
  try {
    const auto& templates = j.at("templates");
    for (TemplateRole r : kTemplateRoles) {
      const auto& entry = templates.at(std::string(role_name(r)));
      const auto file = dir / entry.at("file").get<std::string>();
      const Vec3 origin = detail::json_vec3(entry.value("origin", nlohmann::json()), Vec3::Zero());
      const Vec3 axis = detail::json_vec3(entry.value("axis", nlohmann::json()), Vec3::UnitZ());
      lib.get(r) = MeshTemplate::from_source(read_stl_file(file).mesh, origin, axis);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("library manifest " + manifest_path.string() + ": " + e.what());
  }
  lib.validate();
  return lib;
}

// Writes one STL per role plus `library.json` into `dir`.
inline void save_mesh_library(const MeshLibrary& lib, const std::filesystem::path& dir,
                              StlFormat format = StlFormat::binary) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["version"] = 1;
  for (TemplateRole r : kTemplateRoles) {
    const std::string name(role_name(r));
    write_stl_file(dir / (name + ".stl"), lib.get(r).mesh, format);
    manifest["templates"][name] = {{"file", name + ".stl"},
                                   {"origin", {0.0, 0.0, 0.0}},
                                   {"axis", {0.0, 0.0, 1.0}}};
  }
  write_file_bytes(dir / "library.json", manifest.dump(2) + "\n");
}

}  // namespace arbor
