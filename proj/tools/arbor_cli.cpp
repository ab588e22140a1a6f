// arbor: command-line front end for tree and forest generation.
//
// Exit codes: 0 ok, 2 invalid flags, 3 input/library parse or load failure,
// 4 write failure, 5 invalid scene or intensity configuration. Every failure
// prints one line starting with "error:" to stderr. Summaries go to stdout as
// key=value lines.

#include "arbor/arbor.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace arbor;

namespace {

enum ExitCode : int { kOk = 0, kBadFlags = 2, kBadInput = 3, kWriteFailed = 4, kBadConfig = 5 };

struct CliFailure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) { throw CliFailure{code, message}; }

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::string fmt_vec(const Vec3& v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g", v.x(), v.y(), v.z());
  return buf;
}

std::string fmt_num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void print_mesh_stats(const MeshStats& s) {
  std::cout << "triangles=" << s.triangle_count << "\n";
  if (s.bounds.empty()) {
    std::cout << "bbox_min=none\nbbox_max=none\n";
  } else {
    std::cout << "bbox_min=" << fmt_vec(s.bounds.min) << "\n"
              << "bbox_max=" << fmt_vec(s.bounds.max) << "\n";
  }
  std::cout << "area=" << fmt_num(s.total_area) << "\n";
}

StlFormat parse_format(const std::string& s) { return s == "ascii" ? StlFormat::ascii : StlFormat::binary; }

// ---------------------------------------------------------------------------

struct TreeFlags {
  int branches = 8;
  int subbranches = 3;
  int leaves = 4;
  double height = 10.0;
  std::optional<std::uint64_t> seed;
  std::string lib = "builtin";
  std::string out;
  std::string stage = "leaves";
  std::string format = "binary";
};

int run_tree(const TreeFlags& f) {
  TreeParams params;
  params.branch_count = f.branches;
  params.subbranches_per_branch = f.subbranches;
  params.leaves_per_subbranch = f.leaves;
  params.trunk_height = f.height;
  params.seed = f.seed.value_or(fresh_seed());
  try {
    params.validate();
  } catch (const ValidationError& e) {
    fail(kBadFlags, e.what());
  }
  const Stage stage = *parse_stage(f.stage);

  MeshLibrary lib;
  try {
    lib = load_library(f.lib);
  } catch (const Error& e) {
    fail(kBadInput, "cannot load mesh library: " + std::string(e.what()));
  }

  const TreeModel model = build_tree(params, lib);
  const TriangleMesh mesh = stage_mesh(model, stage);
  const fs::path out(f.out);
  std::optional<fs::path> csv;
  try {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_stl_file(out, mesh, parse_format(f.format));
    if (stage == Stage::leaves) {
      csv = out.parent_path() / "leaves.csv";
      write_file_bytes(*csv, centroids_csv(model.leaf_centroids));
    }
  } catch (const std::exception& e) {
    fail(kWriteFailed, e.what());
  }

  std::cout << "seed=" << params.seed << "\n"
            << "stage=" << stage_name(stage) << "\n"
            << "branches=" << model.skeleton.count_at_depth(1) << "\n"
            << "subbranches=" << model.skeleton.count_at_depth(2) << "\n"
            << "file=" << out.string() << "\n"
            << "format=" << format_name(parse_format(f.format)) << "\n";
  print_mesh_stats(mesh_stats(mesh));
  if (csv) {
    std::cout << "leaves_csv=" << csv->string() << "\n"
              << "leaf_centroids=" << model.leaf_centroids.size() << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct ForestFlags {
  std::string config;
  std::string out;
  std::string mode = "per-tree";
  std::string format = "binary";
  std::string stage = "leaves";
  unsigned threads = 0;
};

int run_forest(const ForestFlags& f) {
  json doc;
  try {
    doc = json::parse(read_file_bytes(f.config));
  } catch (const IoError& e) {
    fail(kBadInput, e.what());
  } catch (const json::exception& e) {
    fail(kBadConfig, "scene config: " + one_line(e.what()));
  }

  bool seed_chosen = false;
  if (!doc.contains("master_seed")) {
    doc["master_seed"] = fresh_seed();
    seed_chosen = true;
  }
  SceneConfig config;
  try {
    config = scene_config_from_json(doc);
  } catch (const Error& e) {
    fail(kBadConfig, e.what());
  }

  ExportOptions opt;
  opt.mode = f.mode == "merged" ? ExportMode::merged : ExportMode::per_tree;
  opt.format = parse_format(f.format);
  opt.stage = *parse_stage(f.stage);
  const fs::path base = fs::path(f.config).parent_path();
  std::string lib_spec = "builtin";
  if (doc.contains("library")) {
    if (!doc.at("library").is_string()) fail(kBadConfig, "scene config: library must be a string");
    lib_spec = doc.at("library").get<std::string>();
  }
  if (lib_spec != "builtin") {
    fs::path p(lib_spec);
    if (p.is_relative()) p = base / p;
    lib_spec = fs::weakly_canonical(p).string();
  }
  opt.library = lib_spec;

  MeshLibrary lib;
  try {
    lib = load_library(lib_spec);
  } catch (const Error& e) {
    fail(kBadInput, "cannot load mesh library: " + std::string(e.what()));
  }

  const Scene scene = compose_forest(config, lib, f.threads);
  json manifest;
  try {
    manifest = export_scene(scene, f.out, opt);
  } catch (const std::exception& e) {
    fail(kWriteFailed, e.what());
  }

  const SceneStats stats = scene_stats(scene, opt.stage);
  if (seed_chosen) std::cout << "seed_chosen=true\n";
  std::cout << "master_seed=" << config.master_seed << "\n"
            << "trees=" << stats.tree_count << "\n"
            << "total_triangles=" << stats.total_triangles << "\n"
            << "nearest_neighbor_min=" << fmt_num(stats.nearest_neighbor_min_distance) << "\n"
            << "mode=" << mode_name(opt.mode) << "\n"
            << "manifest=" << (fs::path(f.out) / kManifestFileName).string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct IppFlags {
  std::string region;
  std::string intensity;
  std::optional<std::uint64_t> seed;
  std::size_t reps = 1;
  std::string out;
  bool counts_only = false;
  double min_spacing = 0.0;
};

Region parse_region_flag(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(kBadFlags, "--region: cannot parse '" + item + "'");
    }
  }
  if (v.size() != 4) fail(kBadFlags, "--region expects x0,x1,y0,y1");
  Region r{v[0], v[1], v[2], v[3]};
  try {
    r.validate();
  } catch (const ValidationError& e) {
    fail(kBadFlags, std::string("--region: ") + e.what());
  }
  return r;
}

IntensityField parse_intensity_flag(const std::string& s, const Region& region) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) fail(kBadFlags, "--intensity expects constant:VALUE or raster:FILE");
  const std::string kind = s.substr(0, colon);
  const std::string arg = s.substr(colon + 1);
  if (kind == "constant") {
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      fail(kBadFlags, "--intensity: cannot parse '" + arg + "'");
    }
    try {
      return IntensityField::constant(v);
    } catch (const ValidationError& e) {
      fail(kBadConfig, e.what());
    }
  }
  if (kind != "raster") fail(kBadFlags, "--intensity kind must be constant or raster");
  std::string text;
  try {
    text = read_file_bytes(arg);
  } catch (const IoError& e) {
    fail(kBadInput, e.what());
  }
  try {
    IntensityField f = intensity_from_json(json::parse(text), &region);
    f.require_covers(region);
    return f;
  } catch (const json::exception& e) {
    fail(kBadConfig, "raster " + arg + ": " + one_line(e.what()));
  } catch (const ValidationError& e) {
    fail(kBadConfig, "raster " + arg + ": " + e.what());
  }
}

int run_ipp_sample(const IppFlags& f) {
  const Region region = parse_region_flag(f.region);
  const IntensityField field = parse_intensity_flag(f.intensity, region);
  if (f.reps == 0) fail(kBadFlags, "--reps must be >= 1");
  if (!(f.min_spacing >= 0.0)) fail(kBadFlags, "--min-spacing must be >= 0");
  if (!f.counts_only && f.reps > 1 && f.out.empty()) {
    fail(kBadFlags, "--out DIR is required for more than one replication");
  }
  const std::uint64_t seed = f.seed.value_or(fresh_seed());
  const bool summary_to_stdout = !f.out.empty() || f.counts_only;

  std::vector<std::size_t> counts;
  std::string counts_csv = "replication,count\n";
  try {
    if (!f.out.empty() && (f.reps > 1 && !f.counts_only)) fs::create_directories(f.out);
    for (std::size_t i = 0; i < f.reps; ++i) {
      const PointPattern p =
          min_distance_filter(sample_ipp_thinning(field, region, derive_seed(seed, i)), f.min_spacing);
      counts.push_back(p.size());
      counts_csv += std::to_string(i) + "," + std::to_string(p.size()) + "\n";
      if (f.counts_only) continue;
      if (f.reps == 1 && f.out.empty()) {
        std::cout << pattern_csv(p);
      } else if (f.reps == 1) {
        write_file_bytes(f.out, pattern_csv(p));
      } else {
        write_file_bytes(fs::path(f.out) / ("pattern_" + std::to_string(i) + ".csv"), pattern_csv(p));
      }
    }
    if (f.counts_only && !f.out.empty()) write_file_bytes(f.out, counts_csv);
  } catch (const IoError& e) {
    fail(kWriteFailed, e.what());
  }

  if (!summary_to_stdout) return kOk;
  if (f.counts_only && f.out.empty()) std::cout << counts_csv;
  double mean = 0.0;
  for (auto c : counts) mean += static_cast<double>(c);
  mean /= static_cast<double>(counts.size());
  double var = 0.0;
  for (auto c : counts) var += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
  var = counts.size() > 1 ? var / static_cast<double>(counts.size() - 1) : 0.0;
  std::cout << "seed=" << seed << "\n"
            << "reps=" << f.reps << "\n"
            << "expected=" << fmt_num(integrate_intensity(field, region)) << "\n"
            << "mean=" << fmt_num(mean) << "\n"
            << "variance=" << fmt_num(var) << "\n";
  if (mean > 0.0) std::cout << "dispersion=" << fmt_num(var / mean) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int run_stl_info(const std::string& file) {
  std::string bytes;
  try {
    bytes = read_file_bytes(file);
  } catch (const IoError& e) {
    fail(kBadInput, e.what());
  }
  LoadedStl loaded;
  try {
    loaded = read_stl_detect(bytes);
  } catch (const Error& e) {
    fail(kBadInput, file + ": " + e.what());
  }
  std::cout << "file=" << file << "\n"
            << "format=" << format_name(loaded.format) << "\n"
            << "name=" << one_line(loaded.mesh.name) << "\n"
            << "bytes=" << bytes.size() << "\n";
  print_mesh_stats(mesh_stats(loaded.mesh));
  return kOk;
}

int run_rewrite(const std::string& grammar, unsigned iterations) {
  std::string text;
  try {
    text = read_file_bytes(grammar);
  } catch (const IoError& e) {
    fail(kBadInput, e.what());
  }
  std::optional<LSystem> ls;
  try {
    ls.emplace(parse_lsystem(text));
  } catch (const Error& e) {
    fail(kBadInput, grammar + ": " + e.what());
  }
  const DerivationString d = rewrite(*ls, iterations);
  std::cout << "derivation=" << d.symbols << "\n"
            << "level=" << d.level << "\n"
            << "length=" << d.symbols.size() << "\n"
            << "branch_symbols=" << count_branch_symbols(d) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arbor: L-system trees and Poisson-process forests as STL meshes"};
  app.require_subcommand(1);

  TreeFlags tree;
  auto* tree_cmd = app.add_subcommand("tree", "Build one tree and write a stage as STL");
  tree_cmd->add_option("--branches", tree.branches, "Depth-1 branch count")->check(CLI::PositiveNumber);
  tree_cmd->add_option("--subbranches", tree.subbranches, "Sub-branches per branch")->check(CLI::NonNegativeNumber);
  tree_cmd->add_option("--leaves", tree.leaves, "Leaves per sub-branch")->check(CLI::NonNegativeNumber);
  tree_cmd->add_option("--height", tree.height, "Trunk height")->check(CLI::PositiveNumber);
  tree_cmd->add_option("--seed", tree.seed, "Random seed (printed when omitted)");
  tree_cmd->add_option("--lib", tree.lib, "Mesh library manifest, or 'builtin'");
  tree_cmd->add_option("--out", tree.out, "Output STL path")->required();
  tree_cmd->add_option("--stage", tree.stage, "Stage to export")
      ->check(CLI::IsMember({"skeleton", "branches", "subbranches", "leaves"}));
  tree_cmd->add_option("--format", tree.format, "STL encoding")->check(CLI::IsMember({"binary", "ascii"}));

  ForestFlags forest;
  auto* forest_cmd = app.add_subcommand("forest", "Compose and export a forest scene");
  forest_cmd->add_option("--config", forest.config, "Scene configuration JSON")->required();
  forest_cmd->add_option("--out", forest.out, "Output directory")->required();
  forest_cmd->add_option("--mode", forest.mode, "Export mode")->check(CLI::IsMember({"merged", "per-tree"}));
  forest_cmd->add_option("--format", forest.format, "STL encoding")->check(CLI::IsMember({"binary", "ascii"}));
  forest_cmd->add_option("--stage", forest.stage, "Stage to export")
      ->check(CLI::IsMember({"skeleton", "branches", "subbranches", "leaves"}));
  forest_cmd->add_option("--threads", forest.threads, "Build threads (0 = all cores)");

  IppFlags ipp;
  auto* ipp_cmd = app.add_subcommand("ipp-sample", "Sample point patterns by thinning");
  ipp_cmd->add_option("--region", ipp.region, "x0,x1,y0,y1")->required();
  ipp_cmd->add_option("--intensity", ipp.intensity, "constant:VALUE or raster:FILE")->required();
  ipp_cmd->add_option("--seed", ipp.seed, "Random seed (printed when omitted)");
  ipp_cmd->add_option("--reps", ipp.reps, "Replications; replication i uses derive_seed(seed, i)");
  ipp_cmd->add_option("--out", ipp.out, "CSV file (one replication or counts) or directory");
  ipp_cmd->add_flag("--counts-only", ipp.counts_only, "Only report per-replication counts");
  ipp_cmd->add_option("--min-spacing", ipp.min_spacing, "Hard-core distance applied after thinning");

  std::string stl_file;
  auto* info_cmd = app.add_subcommand("stl-info", "Print STL statistics");
  info_cmd->add_option("file", stl_file, "STL file")->required();

  std::string grammar;
  unsigned iterations = 1;
  auto* rewrite_cmd = app.add_subcommand("rewrite", "Rewrite an L-system grammar");
  rewrite_cmd->add_option("--grammar", grammar, "Grammar file")->required();
  rewrite_cmd->add_option("--iterations", iterations, "Rewrite iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return kBadFlags;
  }

  try {
    if (*tree_cmd) return run_tree(tree);
    if (*forest_cmd) return run_forest(forest);
    if (*ipp_cmd) return run_ipp_sample(ipp);
    if (*info_cmd) return run_stl_info(stl_file);
    if (*rewrite_cmd) return run_rewrite(grammar, iterations);
  } catch (const CliFailure& f) {
    std::cerr << "error: " << one_line(f.message) << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << "\n";
    return kBadConfig;
  }
  return kBadFlags;
}
