#include "arbor/templates.hpp"
#include "arbor/tree.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace arbor {
namespace {

TreeParams params(int k, int m, int leaves, std::uint64_t seed = 1) {
  TreeParams p;
  p.branch_count = k;
  p.subbranches_per_branch = m;
  p.leaves_per_subbranch = leaves;
  p.seed = seed;
  return p;
}

std::size_t count_depth(const Skeleton& sk, unsigned depth) {
  std::size_t n = 0;
  for (const auto& node : sk.nodes) n += node.depth == depth;
  return n;
}

// Centroid of the template's base ring (local z == 0) after placement.
Vec3 placed_base_centroid(const MeshTemplate& tmpl, const RigidTransform& t) {
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  for (const auto& tri : tmpl.mesh.triangles) {
    for (const auto& v : tri.v) {
      if (v.z() == 0.0) {
        sum += t.apply_point(v);
        ++n;
      }
    }
  }
  return sum / static_cast<double>(n);
}

TEST(Skeleton, CountsForBranchSettings) {
  for (int k : {8, 12, 16}) {
    const Skeleton sk = build_skeleton(params(k, 0, 0));
    EXPECT_EQ(sk.nodes.size(), static_cast<std::size_t>(k + 1));
    EXPECT_EQ(count_depth(sk, 0), 1u);
    EXPECT_EQ(count_depth(sk, 1), static_cast<std::size_t>(k));
    EXPECT_EQ(sk.count_at_depth(1), static_cast<std::size_t>(k));
  }
}

TEST(Skeleton, SubbranchCounts) {
  for (int k : {3, 8, 12}) {
    for (int m : {1, 2, 5}) {
      const Skeleton sk = build_skeleton(params(k, m, 0));
      EXPECT_EQ(count_depth(sk, 1), static_cast<std::size_t>(k));
      EXPECT_EQ(count_depth(sk, 2), static_cast<std::size_t>(k * m));
      for (std::size_t i = 0; i < sk.nodes.size(); ++i) {
        if (sk.nodes[i].depth == 1) {
          EXPECT_EQ(sk.children(i).size(), static_cast<std::size_t>(m));
        }
      }
    }
  }
}

TEST(Skeleton, ZeroJitterSpacing) {
  TreeParams p = params(8, 0, 0);
  p.jitter = AngleJitterParams{0.0, 0.0, 1.0, 1.0};
  const Skeleton sk = build_skeleton(p);
  for (std::size_t i = 1; i < sk.nodes.size(); ++i) {
    EXPECT_NEAR(sk.nodes[i].azimuth_deg, 45.0 * static_cast<double>(i - 1), 1e-9);
    EXPECT_NEAR(rad_to_deg(std::acos(sk.nodes[i].direction.z())), 40.0, 1e-9);
    EXPECT_NEAR(sk.nodes[i].length, 5.0, 1e-12);
  }
}

TEST(Tree, TriangleLedger) {
  const MeshLibrary lib = builtin_mesh_library();
  const std::size_t trunk = lib.trunk.mesh.size();
  const std::size_t branch = lib.branch.mesh.size();
  const std::size_t sub = lib.sub_branch.mesh.size();
  const std::size_t leaf = lib.leaf.mesh.size();
  for (int k : {8, 12, 16}) {
    for (int m : {0, 3}) {
      for (int l : {0, 4}) {
        const TreeModel t = build_tree(params(k, m, l), lib);
        const std::size_t hosts = static_cast<std::size_t>(m > 0 ? k * m : k);
        EXPECT_EQ(t.trunk_end, trunk);
        EXPECT_EQ(t.branches_end, trunk + k * branch);
        EXPECT_EQ(t.mesh.size(), trunk + k * branch + static_cast<std::size_t>(k * m) * sub);
        EXPECT_EQ(t.leaf_mesh.size(), hosts * static_cast<std::size_t>(l) * leaf);
        EXPECT_EQ(t.leaf_centroids.size(), t.leaf_mesh.size());
      }
    }
  }
}

TEST(Tree, DeterministicPerSeed) {
  const MeshLibrary lib = builtin_mesh_library();
  const TreeModel a = build_tree(params(12, 3, 4, 77), lib);
  const TreeModel b = build_tree(params(12, 3, 4, 77), lib);
  const TreeModel c = build_tree(params(12, 3, 4, 78), lib);
  EXPECT_EQ(write_stl(stage_mesh(a, Stage::leaves), StlFormat::binary),
            write_stl(stage_mesh(b, Stage::leaves), StlFormat::binary));
  EXPECT_NE(a.mesh, c.mesh);
}

TEST(Tree, ZeroJitterIsSeedIndependent) {
  const MeshLibrary lib = builtin_mesh_library();
  TreeParams p = params(8, 2, 3, 1);
  p.jitter = AngleJitterParams{0.0, 0.0, 1.0, 1.0};
  TreeParams q = p;
  q.seed = 999;
  EXPECT_EQ(build_tree(p, lib).mesh, build_tree(q, lib).mesh);
  EXPECT_EQ(build_tree(p, lib).leaf_mesh, build_tree(q, lib).leaf_mesh);
}

TEST(Tree, LaterStagesDoNotPerturbEarlierOnes) {
  const MeshLibrary lib = builtin_mesh_library();
  const TreeModel bare = build_tree(params(12, 0, 0, 5), lib);
  const TreeModel full = build_tree(params(12, 0, 6, 5), lib);
  EXPECT_EQ(bare.mesh, full.mesh);
  const TreeModel with_sub = build_tree(params(12, 3, 0, 5), lib);
  const TreeModel with_leaves = build_tree(params(12, 3, 2, 5), lib);
  EXPECT_EQ(with_sub.mesh, with_leaves.mesh);
}

TEST(Tree, TemplateBasesSitOnAttachmentPoints) {
  const MeshLibrary lib = builtin_mesh_library();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const TreeModel t = build_tree(params(12, 3, 2, seed), lib);
    for (const auto& inst : t.instances) {
      const Vec3 base = placed_base_centroid(lib.get(inst.role), inst.transform);
      EXPECT_LT((base - t.skeleton.nodes[inst.node].attachment_point).norm(), 1e-6);
    }
  }
}

TEST(Tree, ChildrenAttachOnRealizedParentAxis) {
  const MeshLibrary lib = builtin_mesh_library();
  const TreeModel t = build_tree(params(12, 4, 0, 9), lib);
  const Skeleton& sk = t.skeleton;
  for (std::size_t i = 1; i < sk.nodes.size(); ++i) {
    const SkeletonNode& n = sk.nodes[i];
    const SkeletonNode& parent = sk.nodes[n.parent];
    const Vec3 tip = parent.attachment_point + parent.length * parent.direction;
    EXPECT_LT(oracle::point_segment_distance(n.attachment_point, parent.attachment_point, tip), 1e-9);
    if (n.depth == 2) {
      EXPECT_NEAR(n.length, 0.5 * parent.length, 0.2 * parent.length);
    }
  }
}

TEST(Tree, InstanceRangesCoverMesh) {
  const MeshLibrary lib = builtin_mesh_library();
  const TreeModel t = build_tree(params(8, 2, 3, 4), lib);
  std::size_t next = 0;
  for (const auto& inst : t.instances) {
    EXPECT_EQ(inst.first, next);
    EXPECT_EQ(inst.count, lib.get(inst.role).mesh.size());
    next += inst.count;
  }
  EXPECT_EQ(next, t.mesh.size());
}

TEST(Leaves, NoneRequested) {
  const TreeModel t = build_tree(params(8, 3, 0), builtin_mesh_library());
  EXPECT_TRUE(t.leaf_mesh.empty());
  EXPECT_TRUE(t.leaf_centroids.empty());
  EXPECT_EQ(centroids_csv(t.leaf_centroids), "x,y,z\n");
}

TEST(Leaves, SingleTriangleTemplate) {
  MeshLibrary lib = builtin_mesh_library();
  Triangle tri;
  tri.v = {Vec3(0, 0, 0), Vec3(0.2, 0, 0.5), Vec3(0, 0, 1)};
  lib.leaf = MeshTemplate::from_local(recompute_normals(TriangleMesh{"leaf", {tri}}).mesh);
  const TreeModel t = build_tree(params(12, 2, 5), lib);
  EXPECT_EQ(t.leaf_mesh.size(), 120u);
  ASSERT_EQ(t.leaf_centroids.size(), 120u);
}

TEST(Leaves, CentroidsMatchTriangles) {
  const TreeModel t = build_tree(params(12, 3, 4, 21), builtin_mesh_library());
  ASSERT_EQ(t.leaf_centroids.size(), t.leaf_mesh.size());
  ASSERT_GE(t.leaf_centroids.size(), 100u);
  for (std::size_t i = 0; i < t.leaf_mesh.size(); ++i) {
    const auto& v = t.leaf_mesh.triangles[i].v;
    const Vec3 expected = (v[0] + v[1] + v[2]) / 3.0;
    EXPECT_LT((t.leaf_centroids[i] - expected).norm(), 1e-9);
  }
}

TEST(Leaves, CsvRows) {
  const TreeModel t = build_tree(params(8, 2, 2, 3), builtin_mesh_library());
  const std::string csv = centroids_csv(t.leaf_centroids);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,z");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    double x = 0, y = 0, z = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &z), 3);
    const Vec3& c = t.leaf_centroids[rows];
    EXPECT_EQ(Vec3(x, y, z), c);
    ++rows;
  }
  EXPECT_EQ(rows, t.leaf_centroids.size());
}

TEST(Stages, MonotoneTriangleCounts) {
  const TreeModel t = build_tree(params(12, 3, 4, 2), builtin_mesh_library());
  const std::size_t s = stage_mesh(t, Stage::skeleton).size();
  const std::size_t b = stage_mesh(t, Stage::branches).size();
  const std::size_t sb = stage_mesh(t, Stage::subbranches).size();
  const std::size_t l = stage_mesh(t, Stage::leaves).size();
  EXPECT_EQ(s, 8 * t.skeleton.nodes.size());
  EXPECT_LT(b, sb);
  EXPECT_LT(sb, l);
  EXPECT_EQ(l, t.mesh.size() + t.leaf_mesh.size());
}

TEST(Stages, ParseNames) {
  for (Stage s : {Stage::skeleton, Stage::branches, Stage::subbranches, Stage::leaves}) {
    EXPECT_EQ(parse_stage(stage_name(s)), s);
  }
  EXPECT_FALSE(parse_stage("roots").has_value());
}

TEST(Tree, HeightBounds) {
  const MeshLibrary lib = builtin_mesh_library();
  for (double h : {2.0, 10.0, 35.0}) {
    TreeParams p = params(16, 3, 4, 8);
    p.trunk_height = h;
    const MeshStats s = mesh_stats(stage_mesh(build_tree(p, lib), Stage::leaves));
    const double d = p.depth_scale_decay;
    EXPECT_GE(s.bounds.max.z(), h - 1e-9);
    EXPECT_LE(s.bounds.max.z(), h * (1.0 + 2.0 * d + 0.25));
    EXPECT_GE(s.bounds.min.z(), -0.05 * h);
  }
}

TEST(Tree, EmptyTemplateRejected) {
  MeshLibrary lib = builtin_mesh_library();
  lib.branch = MeshTemplate{};
  EXPECT_THROW(build_tree(params(8, 0, 0), lib), ValidationError);
  MeshLibrary no_leaf = builtin_mesh_library();
  no_leaf.leaf = MeshTemplate{};
  EXPECT_NO_THROW(build_tree(params(8, 1, 0), no_leaf));
  EXPECT_THROW(build_tree(params(8, 1, 1), no_leaf), ValidationError);
}

TEST(Tree, InvalidParams) {
  const MeshLibrary lib = builtin_mesh_library();
  EXPECT_THROW(build_tree(params(0, 0, 0), lib), ValidationError);
  EXPECT_THROW(build_tree(params(4, -1, 0), lib), ValidationError);
  TreeParams p = params(4, 0, 0);
  p.trunk_height = 0.0;
  EXPECT_THROW(build_tree(p, lib), ValidationError);
}

TEST(Templates, BuiltinShapes) {
  const MeshLibrary lib = builtin_mesh_library();
  EXPECT_NO_THROW(lib.validate());
  EXPECT_EQ(lib.trunk.mesh.size(), 168u);
  EXPECT_EQ(lib.branch.mesh.size(), 112u);
  EXPECT_EQ(lib.sub_branch.mesh.size(), 60u);
  EXPECT_EQ(lib.leaf.mesh.size(), 2u);
  for (TemplateRole r : kTemplateRoles) EXPECT_DOUBLE_EQ(lib.get(r).axis_length, 1.0);
}

TEST(Templates, FromSourceReorients) {
  // A template authored along +X with its base at (5, 0, 0).
  const MeshLibrary lib = builtin_mesh_library();
  const RigidTransform authored{align_z_to(Vec3::UnitX()), Vec3(5, 0, 0), 1.0};
  const MeshTemplate t =
      MeshTemplate::from_source(apply_to_mesh(authored, lib.branch.mesh), Vec3(5, 0, 0), Vec3::UnitX());
  EXPECT_NEAR(t.axis_length, 1.0, 1e-12);
  const MeshStats a = mesh_stats(t.mesh);
  const MeshStats b = mesh_stats(lib.branch.mesh);
  EXPECT_LT((a.bounds.min - b.bounds.min).norm(), 1e-12);
  EXPECT_LT((a.bounds.max - b.bounds.max).norm(), 1e-12);
}

TEST(Templates, LibraryRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "arbor_tree_test_lib";
  std::filesystem::remove_all(dir);
  const MeshLibrary lib = builtin_mesh_library();
  save_mesh_library(lib, dir);
  const MeshLibrary back = load_mesh_library(dir / "library.json");
  for (TemplateRole r : kTemplateRoles) {
    EXPECT_EQ(back.get(r).mesh.size(), lib.get(r).mesh.size());
    EXPECT_NEAR(back.get(r).axis_length, 1.0, 1e-6);
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace arbor
