#pragma once

// Staged tree assembly: skeleton -> trunk + branches -> sub-branches -> leaves.
//
// Each stage draws from its own stream derived from TreeParams::seed, so an
// earlier stage's output never depends on whether later stages run. Stages
// also update the skeleton to the realized placement of every instance (after
// pitch and scale jitter), so children hang off the geometry actually emitted.

#include "arbor/error.hpp"
#include "arbor/geometry.hpp"
#include "arbor/lsystem.hpp"
#include "arbor/mesh_library.hpp"
#include "arbor/rng.hpp"
#include "arbor/stl.hpp"
#include "arbor/transform.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arbor {

struct TreeParams {
  int branch_count = 8;
  int subbranches_per_branch = 0;
  int leaves_per_subbranch = 0;
  double trunk_height = 10.0;
  double branch_pitch = 40.0;  // degrees off the parent axis
  AngleJitterParams jitter{10.0, 10.0, 0.9, 1.1};
  double depth_scale_decay = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (branch_count < 1) throw ValidationError("branch_count must be >= 1");
    if (subbranches_per_branch < 0) throw ValidationError("subbranches_per_branch must be >= 0");
    if (leaves_per_subbranch < 0) throw ValidationError("leaves_per_subbranch must be >= 0");
    if (!(trunk_height > 0.0) || !std::isfinite(trunk_height)) {
      throw ValidationError("trunk_height must be positive");
    }
    if (!(branch_pitch >= 0.0 && branch_pitch <= 180.0)) {
      throw ValidationError("branch_pitch must lie in [0, 180]");
    }
    if (!(depth_scale_decay > 0.0 && depth_scale_decay <= 1.0)) {
      throw ValidationError("depth_scale_decay must lie in (0, 1]");
    }
    jitter.validate();
  }

  bool operator==(const TreeParams&) const = default;
};

enum class Stage { skeleton, branches, subbranches, leaves };

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::skeleton: return "skeleton";
    case Stage::branches: return "branches";
    case Stage::subbranches: return "subbranches";
    case Stage::leaves: return "leaves";
  }
  return "";
}

inline std::optional<Stage> parse_stage(std::string_view s) {
  for (Stage st : {Stage::skeleton, Stage::branches, Stage::subbranches, Stage::leaves}) {
    if (stage_name(st) == s) return st;
  }
  return std::nullopt;
}

// One placed template. Triangles [first, first + count) of the owning mesh.
struct MeshInstance {
  TemplateRole role;
  std::size_t node;  // skeleton node, or host node for leaves
  RigidTransform transform;
  std::size_t first;
  std::size_t count;
};

struct TreeModel {
  TreeParams params;
  Skeleton skeleton;
  TriangleMesh mesh;       // trunk, branches, sub-branches in that order
  TriangleMesh leaf_mesh;
  std::vector<Vec3> leaf_centroids;  // one per leaf triangle
  std::size_t trunk_end = 0;         // mesh.triangles index where branches start
  std::size_t branches_end = 0;      // ... where sub-branches start
  std::vector<MeshInstance> instances;
  std::vector<MeshInstance> leaf_instances;
};

// Leaf placement constants.
inline constexpr double kLeafPitch = 45.0;
inline constexpr double kLeafLengthRatio = 0.3;  // leaf length / host length
inline constexpr double kLeafSpan = 0.7;         // distal fraction of the host axis

namespace detail {

enum StageStream : std::uint64_t { kSkeletonStream = 1, kBranchStream, kSubStream, kLeafStream };

// "d" per branch, each followed by a matched group of m sub-branch symbols,
// joined by unmatched '[' separators: m = 2, k = 2 gives "d[dd][d[dd]".
inline std::string synthesize_derivation(int branches, int subbranches) {
  std::string s;
  for (int i = 0; i < branches; ++i) {
    if (i > 0) s += '[';
    s += kBranchSymbol;
    if (subbranches > 0) {
      s += '[';
      s.append(static_cast<std::size_t>(subbranches), kBranchSymbol);
      s += ']';
    }
  }
  return s;
}

inline void reposition_children(Skeleton& sk, std::size_t parent, double decay) {
  for (std::size_t c : sk.children(parent)) {
    sk.nodes[c].length = sk.nodes[parent].length * decay;
    place_on_parent(sk, c);
  }
}

inline void require_template(const MeshTemplate& t, TemplateRole r) {
  if (t.mesh.empty() || !(t.axis_length > 0.0)) {
    throw ValidationError("template '" + std::string(role_name(r)) + "' is empty");
  }
}

// Places `tmpl` along a node and records the realized frame back into it.
inline void instance_on_node(TreeModel& model, std::size_t node, TemplateRole role,
                             const MeshTemplate& tmpl, RigidTransform t) {
  SkeletonNode& n = model.skeleton.nodes[node];
  n.direction = t.apply_direction(Vec3::UnitZ()).normalized();
  n.length = t.scale * tmpl.axis_length;
  const std::size_t first = model.mesh.triangles.size();
  model.mesh.append(apply_to_mesh(t, tmpl.mesh));
  model.instances.push_back({role, node, t, first, tmpl.mesh.size()});
}

}  // namespace detail

inline Skeleton build_skeleton(const TreeParams& params) {
  params.validate();
  TurtleConfig cfg;
  cfg.step_length = params.trunk_height * params.depth_scale_decay;
  cfg.branch_pitch = params.branch_pitch;
  cfg.length_decay = params.depth_scale_decay;
  cfg.jitter_range = params.jitter.azimuth_range;
  cfg.azimuth_policy = params.jitter.azimuth_range > 0.0 ? AzimuthPolicy::jittered_uniform
                                                         : AzimuthPolicy::uniform_spacing;
  Rng rng(derive_seed(params.seed, detail::kSkeletonStream));
  const DerivationString s{
      detail::synthesize_derivation(params.branch_count, params.subbranches_per_branch), 1};
  return interpret_turtle(s, cfg, TrunkSpec{params.trunk_height, Vec3::Zero()}, rng);
}

// Trunk plus one branch instance per depth-1 node. Branch scale is the node
// length over the template axis length, times a U(scale_min, scale_max) draw.
inline TreeModel attach_branches(const Skeleton& skeleton, const MeshLibrary& lib,
                                 const TreeParams& params) {
  params.validate();
  detail::require_template(lib.trunk, TemplateRole::trunk);
  detail::require_template(lib.branch, TemplateRole::branch);
  if (skeleton.nodes.empty() || skeleton.nodes[0].depth != 0) {
    throw ValidationError("skeleton has no trunk node");
  }

  TreeModel model;
  model.params = params;
  model.skeleton = skeleton;

  const SkeletonNode& trunk = model.skeleton.nodes[0];
  RigidTransform trunk_t{align_z_to(trunk.direction), trunk.attachment_point,
                         trunk.length / lib.trunk.axis_length};
  detail::instance_on_node(model, 0, TemplateRole::trunk, lib.trunk, trunk_t);
  model.trunk_end = model.mesh.size();

  Rng rng(derive_seed(params.seed, detail::kBranchStream));
  for (std::size_t i = 1; i < model.skeleton.nodes.size(); ++i) {
    if (model.skeleton.nodes[i].depth != 1) continue;
    const SkeletonNode& n = model.skeleton.nodes[i];
    RigidTransform t = random_attachment_transform({n.attachment_point, n.direction},
                                                   params.jitter, rng);
    t.scale *= n.length / lib.branch.axis_length;
    detail::instance_on_node(model, i, TemplateRole::branch, lib.branch, t);
    detail::reposition_children(model.skeleton, i, params.depth_scale_decay);
  }
  model.branches_end = model.mesh.size();
  return model;
}

// Sub-branch scale is the realized parent branch scale times
// depth_scale_decay (the node length), with pitch and spin jitter only.
inline TreeModel attach_subbranches(TreeModel model, const MeshLibrary& lib) {
  const TreeParams& params = model.params;
  if (params.subbranches_per_branch == 0) return model;
  detail::require_template(lib.sub_branch, TemplateRole::sub_branch);

  Rng rng(derive_seed(params.seed, detail::kSubStream));
  for (std::size_t i = 1; i < model.skeleton.nodes.size(); ++i) {
    if (model.skeleton.nodes[i].depth != 2) continue;
    const SkeletonNode& n = model.skeleton.nodes[i];
    RigidTransform t = random_attachment_transform({n.attachment_point, n.direction},
                                                   params.jitter, rng);
    t.scale = n.length / lib.sub_branch.axis_length;
    detail::instance_on_node(model, i, TemplateRole::sub_branch, lib.sub_branch, t);
  }
  return model;
}

// Leaves sit at evenly spaced stations over the distal 70% of each host axis
// (sub-branches, or branches when there are none), fanned around the host.
inline TreeModel attach_leaves(TreeModel model, const MeshLibrary& lib) {
  const TreeParams& params = model.params;
  model.leaf_mesh = TriangleMesh{"leaves", {}};
  model.leaf_centroids.clear();
  model.leaf_instances.clear();
  const int per_host = params.leaves_per_subbranch;
  if (per_host == 0) return model;
  detail::require_template(lib.leaf, TemplateRole::leaf);

  const unsigned host_depth = params.subbranches_per_branch > 0 ? 2u : 1u;
  Rng rng(derive_seed(params.seed, detail::kLeafStream));
  for (std::size_t h = 1; h < model.skeleton.nodes.size(); ++h) {
    const SkeletonNode& host = model.skeleton.nodes[h];
    if (host.depth != host_depth) continue;
    for (int j = 0; j < per_host; ++j) {
      const double station = (1.0 - kLeafSpan) + kLeafSpan * (j + 0.5) / per_host;
      const Vec3 point = host.attachment_point + station * host.length * host.direction;
      const Vec3 dir = tilt_direction(host.direction, 360.0 * j / per_host, kLeafPitch);
      RigidTransform t = random_attachment_transform({point, dir}, params.jitter, rng);
      t.scale *= kLeafLengthRatio * host.length / lib.leaf.axis_length;

      const TriangleMesh placed = apply_to_mesh(t, lib.leaf.mesh);
      model.leaf_instances.push_back(
          {TemplateRole::leaf, h, t, model.leaf_mesh.size(), placed.size()});
      for (const auto& tri : placed.triangles) {
        model.leaf_centroids.push_back(triangle_centroid(tri));
      }
      model.leaf_mesh.append(placed);
    }
  }
  return model;
}

inline TreeModel build_tree(const TreeParams& params, const MeshLibrary& lib) {
  TreeModel model = attach_branches(build_skeleton(params), lib, params);
  model = attach_subbranches(std::move(model), lib);
  model = attach_leaves(std::move(model), lib);
  model.mesh.name = "tree";
  return model;
}

// Thin triangular prism per skeleton node, for inspecting the skeleton.
inline TriangleMesh skeleton_mesh(const Skeleton& sk, double radius) {
  TriangleMesh mesh{"skeleton", {}};
  for (std::size_t i = 0; i < sk.nodes.size(); ++i) {
    const SkeletonNode& n = sk.nodes[i];
    const Vec3 p = reference_perpendicular(n.direction);
    const Vec3 q = n.direction.cross(p);
    const double r = radius * (n.depth == 0 ? 2.0 : 1.0);
    std::array<Vec3, 3> base;
    for (int k = 0; k < 3; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 3.0;
      base[k] = n.attachment_point + r * (std::cos(a) * p + std::sin(a) * q);
    }
    const Vec3 top = n.length * n.direction;
    auto add = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
      Triangle t;
      t.v = {a, b, c};
      mesh.triangles.push_back(t);
    };
    for (int k = 0; k < 3; ++k) {
      const Vec3& a = base[k];
      const Vec3& b = base[(k + 1) % 3];
      add(a, b, b + top);
      add(a, b + top, a + top);
    }
    add(base[0], base[2], base[1]);
    add(base[0] + top, base[1] + top, base[2] + top);
  }
  return recompute_normals(std::move(mesh)).mesh;
}

// Geometry of one stage: skeleton, trunk+branches, +sub-branches, or the
// whole tree including leaves.
inline TriangleMesh stage_mesh(const TreeModel& model, Stage stage) {
  switch (stage) {
    case Stage::skeleton:
      return skeleton_mesh(model.skeleton, 0.01 * model.params.trunk_height);
    case Stage::branches: {
      TriangleMesh m{"branches", {}};
      m.triangles.assign(model.mesh.triangles.begin(),
                         model.mesh.triangles.begin() + static_cast<std::ptrdiff_t>(model.branches_end));
      return m;
    }
    case Stage::subbranches: {
      TriangleMesh m = model.mesh;
      m.name = "subbranches";
      return m;
    }
    case Stage::leaves: {
      TriangleMesh m = model.mesh;
      m.name = "tree";
      m.append(model.leaf_mesh);
      return m;
    }
  }
  return {};
}

// x,y,z per line, header line first. %.17g round-trips every double.
inline std::string centroids_csv(const std::vector<Vec3>& points) {
  std::string out = "x,y,z\n";
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x(), p.y(), p.z());
    out += buf;
  }
  return out;
}

}  // namespace arbor
