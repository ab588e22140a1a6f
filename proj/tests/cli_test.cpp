#include "arbor/forest.hpp"
#include "arbor/stl.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#ifndef ARBOR_CLI_PATH
#error "ARBOR_CLI_PATH must point at the arbor executable"
#endif
#ifndef ARBOR_DATA_DIR
#error "ARBOR_DATA_DIR must point at the data directory"
#endif

namespace arbor {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;

  std::map<std::string, std::string> kv() const {
    std::map<std::string, std::string> m;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
  }
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("arbor_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + ARBOR_CLI_PATH + "\" " + args + " >\"" + out.string() +
                            "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file_bytes(out);
    r.err = read_file_bytes(err);
    return r;
  }

  static void expect_one_error_line(const CliRun& r) {
    EXPECT_EQ(r.err.rfind("error:", 0), 0u) << r.err;
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string data(const std::string& name) { return (fs::path(ARBOR_DATA_DIR) / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, RewriteRuleOne) {
  const CliRun r = run("rewrite --grammar " + data("grammars/rule1.txt") + " --iterations 1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = r.kv();
  EXPECT_EQ(kv.at("derivation"), "d(d)+d)[d(d)+d)");
  EXPECT_EQ(kv.at("level"), "1");
  EXPECT_EQ(kv.at("branch_symbols"), "6");
}

TEST_F(Cli, RewriteBadGrammar) {
  write_file_bytes(path("bad.txt"), "vars: d\naxiom: d\nrule: q -> dd\n");
  const CliRun r = run("rewrite --grammar " + path("bad.txt"));
  EXPECT_EQ(r.code, 3);
  expect_one_error_line(r);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(Cli, TreeCountsAndFiles) {
  for (int k : {8, 12, 16}) {
    const CliRun r = run("tree --branches " + std::to_string(k) + " --subbranches 2 --leaves 3 --seed 4 --out " +
                      path("t" + std::to_string(k) + "/tree.stl"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto kv = r.kv();
    EXPECT_EQ(kv.at("branches"), std::to_string(k));
    EXPECT_EQ(kv.at("subbranches"), std::to_string(2 * k));
    EXPECT_EQ(kv.at("seed"), "4");
    const std::size_t expected = 168 + 112 * k + 60 * 2 * k + 2 * 3 * 2 * k;
    EXPECT_EQ(kv.at("triangles"), std::to_string(expected));
    EXPECT_EQ(read_stl_file(path("t" + std::to_string(k) + "/tree.stl")).mesh.size(), expected);
    EXPECT_EQ(kv.at("leaf_centroids"), std::to_string(2 * 3 * 2 * k));  // one per leaf triangle
    EXPECT_TRUE(fs::exists(path("t" + std::to_string(k) + "/leaves.csv")));
  }
}

TEST_F(Cli, TreeIsDeterministicPerSeed) {
  ASSERT_EQ(run("tree --seed 9 --out " + path("a/t.stl")).code, 0);
  ASSERT_EQ(run("tree --seed 9 --out " + path("b/t.stl")).code, 0);
  EXPECT_EQ(read_file_bytes(path("a/t.stl")), read_file_bytes(path("b/t.stl")));
  EXPECT_EQ(read_file_bytes(path("a/leaves.csv")), read_file_bytes(path("b/leaves.csv")));
}

TEST_F(Cli, TreeSeedPrintedWhenOmitted) {
  const CliRun r = run("tree --stage branches --out " + path("t.stl"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string seed = r.kv().at("seed");
  ASSERT_FALSE(seed.empty());
  const CliRun again = run("tree --stage branches --seed " + seed + " --out " + path("u.stl"));
  EXPECT_EQ(read_file_bytes(path("t.stl")), read_file_bytes(path("u.stl")));
  EXPECT_EQ(r.kv().count("leaves_csv"), 0u);
}

TEST_F(Cli, TreeFlagErrors) {
  CliRun r = run("tree --branches 0 --out " + path("t.stl"));
  EXPECT_EQ(r.code, 2);
  expect_one_error_line(r);
  r = run("tree --stage roots --out " + path("t.stl"));
  EXPECT_EQ(r.code, 2);
  expect_one_error_line(r);
  r = run("tree");
  EXPECT_EQ(r.code, 2);
  expect_one_error_line(r);
  r = run("");
  EXPECT_EQ(r.code, 2);
  expect_one_error_line(r);
}

TEST_F(Cli, TreeLibraryErrors) {
  CliRun r = run("tree --lib " + path("missing.json") + " --out " + path("t.stl"));
  EXPECT_EQ(r.code, 3);
  expect_one_error_line(r);
  write_file_bytes(path("lib.json"), "{\"templates\": {}}");
  r = run("tree --lib " + path("lib.json") + " --out " + path("t.stl"));
  EXPECT_EQ(r.code, 3);
  expect_one_error_line(r);
}

TEST_F(Cli, TreeWithExportedLibrary) {
  save_mesh_library(builtin_mesh_library(), dir_ / "lib");
  const CliRun a = run("tree --seed 2 --lib " + path("lib/library.json") + " --out " + path("a/t.stl"));
  const CliRun b = run("tree --seed 2 --out " + path("b/t.stl"));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.kv().at("triangles"), b.kv().at("triangles"));
}

TEST_F(Cli, TreeWriteFailure) {
  write_file_bytes(path("file"), "x");
  const CliRun r = run("tree --seed 1 --out " + path("file/t.stl"));
  EXPECT_EQ(r.code, 4);
  expect_one_error_line(r);
}

TEST_F(Cli, StlInfo) {
  ASSERT_EQ(run("tree --seed 3 --stage branches --format ascii --out " + path("t.stl")).code, 0);
  const CliRun r = run("stl-info " + path("t.stl"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = r.kv();
  EXPECT_EQ(kv.at("format"), "ascii");
  EXPECT_EQ(kv.at("triangles"), std::to_string(168 + 112 * 8));
  EXPECT_TRUE(kv.count("bbox_min") && kv.count("bbox_max") && kv.count("area"));
}

TEST_F(Cli, StlInfoErrors) {
  Triangle t;
  t.normal = Vec3(0, 0, 1);
  t.v = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const std::string bytes = write_stl(TriangleMesh{"x", {t, t}}, StlFormat::binary);
  write_file_bytes(path("trunc.stl"), bytes.substr(0, 150));
  CliRun r = run("stl-info " + path("trunc.stl"));
  EXPECT_EQ(r.code, 3);
  expect_one_error_line(r);
  r = run("stl-info " + path("nope.stl"));
  EXPECT_EQ(r.code, 3);
  expect_one_error_line(r);
}

TEST_F(Cli, IppSampleCounts) {
  const CliRun r = run("ipp-sample --region 0,10,0,10 --intensity constant:1 --seed 12345 --reps 500 --counts-only");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = r.kv();
  EXPECT_EQ(kv.at("reps"), "500");
  EXPECT_EQ(kv.at("expected"), "100");
  EXPECT_NEAR(std::stod(kv.at("mean")), 100.0, 3.0 * std::sqrt(100.0 / 500));
}

TEST_F(Cli, IppSampleSingleCsv) {
  const CliRun r = run("ipp-sample --region 0,2,0,1 --intensity raster:" + data("scenes/two_cell_raster.json") +
                    " --seed 5 --out " + path("p.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file_bytes(path("p.csv"));
  EXPECT_EQ(csv.rfind("x,y\n", 0), 0u);
  const CliRun again = run("ipp-sample --region 0,2,0,1 --intensity raster:" + data("scenes/two_cell_raster.json") +
                        " --seed 5");
  EXPECT_EQ(again.out, csv);
}

TEST_F(Cli, IppSampleErrors) {
  CliRun r = run("ipp-sample --region 0,10,0 --intensity constant:1 --seed 1");
  EXPECT_EQ(r.code, 2);
  expect_one_error_line(r);
  r = run("ipp-sample --region 0,10,0,10 --intensity constant:-1 --seed 1");
  EXPECT_EQ(r.code, 5);
  expect_one_error_line(r);
  write_file_bytes(path("neg.json"), R"({"type":"raster","extent":[0,2,0,1],"cell_size":1,"values":[1,-2]})");
  r = run("ipp-sample --region 0,2,0,1 --intensity raster:" + path("neg.json") + " --seed 1");
  EXPECT_EQ(r.code, 5);
  expect_one_error_line(r);
  EXPECT_NE(r.err.find("row 0, col 1"), std::string::npos) << r.err;
  r = run("ipp-sample --region 0,3,0,1 --intensity raster:" + data("scenes/two_cell_raster.json") + " --seed 1");
  EXPECT_EQ(r.code, 5);
  expect_one_error_line(r);
  r = run("ipp-sample --region 0,2,0,1 --intensity raster:" + path("none.json") + " --seed 1");
  EXPECT_EQ(r.code, 3);
  expect_one_error_line(r);
}

TEST_F(Cli, ForestAndRegenerate) {
  const CliRun a = run("forest --config " + data("scenes/two_trees.json") + " --out " + path("a") + " --mode merged");
  ASSERT_EQ(a.code, 0) << a.err;
  const CliRun b = run("forest --config " + data("scenes/two_trees.json") + " --out " + path("b") + " --mode merged");
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out.substr(0, a.out.find("manifest=")), b.out.substr(0, b.out.find("manifest=")));
  EXPECT_EQ(read_file_bytes(path("a/forest.stl")), read_file_bytes(path("b/forest.stl")));
  EXPECT_EQ(read_file_bytes(path("a/scene.json")), read_file_bytes(path("b/scene.json")));
  const auto kv = a.kv();
  EXPECT_EQ(kv.at("trees"), "2");
  EXPECT_EQ(kv.at("mode"), "merged");
  EXPECT_EQ(read_stl_file(path("a/forest.stl")).mesh.size(), std::stoul(kv.at("total_triangles")));

  // The written manifest is itself a valid config.
  const CliRun c = run("forest --config " + path("a/scene.json") + " --out " + path("c") + " --mode merged");
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(read_file_bytes(path("a/forest.stl")), read_file_bytes(path("c/forest.stl")));
}

TEST_F(Cli, ForestSeedChosen) {
  json cfg = json::parse(read_file_bytes(data("scenes/two_trees.json")));
  cfg.erase("master_seed");
  write_file_bytes(path("cfg.json"), cfg.dump());
  const CliRun r = run("forest --config " + path("cfg.json") + " --out " + path("o") + " --stage branches");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = r.kv();
  EXPECT_EQ(kv.at("seed_chosen"), "true");
  const json m = json::parse(read_file_bytes(path("o/scene.json")));
  EXPECT_EQ(std::to_string(m.at("master_seed").get<std::uint64_t>()), kv.at("master_seed"));
}

TEST_F(Cli, ForestErrors) {
  CliRun r = run("forest --config " + path("missing.json") + " --out " + path("o"));
  EXPECT_EQ(r.code, 3);
  expect_one_error_line(r);
  write_file_bytes(path("bad.json"), "{\"region\": [0, 10, 0, 10], \"intensity\": {\"type\": \"constant\", \"value\": -1}}");
  r = run("forest --config " + path("bad.json") + " --out " + path("o"));
  EXPECT_EQ(r.code, 5);
  expect_one_error_line(r);
  write_file_bytes(path("junk.json"), "{not json");
  r = run("forest --config " + path("junk.json") + " --out " + path("o"));
  EXPECT_EQ(r.code, 5);
  expect_one_error_line(r);
  write_file_bytes(path("blocker"), "x");
  r = run("forest --config " + data("scenes/two_trees.json") + " --out " + path("blocker/o"));
  EXPECT_EQ(r.code, 4);
  expect_one_error_line(r);
  r = run("forest --config " + data("scenes/two_trees.json") + " --out " + path("o") + " --mode tiled");
  EXPECT_EQ(r.code, 2);
  expect_one_error_line(r);
}

}  // namespace
}  // namespace arbor
