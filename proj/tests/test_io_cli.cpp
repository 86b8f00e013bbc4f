#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "radreg/cli.hpp"
#include "radreg/io.hpp"
#include "radreg/scenario.hpp"

using namespace radreg;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("radreg_test_" + std::to_string(std::rand()) +
            std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("scan files round-trip including optional doppler fields") {
  TempDir dir;
  std::vector<RadarScan> scans(2);
  scans[0].t = 0.0;
  PolarTarget a;
  a.r = 5.5;
  a.phi = 0.25;
  a.sigma_r = 0.2;
  a.sigma_phi = 0.03;
  a.v = -1.25;
  a.sigma_v = 0.1;
  PolarTarget b;
  b.r = 2.0;
  b.phi = -1.5;
  b.sigma_r = 0.1;
  b.sigma_phi = 0.02;  // no doppler
  scans[0].targets = {a, b};
  scans[1].t = 0.2;
  scans[1].targets = {b};

  const std::string path = dir.file("scans.jsonl");
  write_scans(path, scans);
  const ScanReadResult result = read_scans(path);
  REQUIRE(result.scans.size() == 2);
  CHECK(result.dropped_zero_range == 0);
  CHECK(result.truncated == 0);
  REQUIRE(result.scans[0].targets.size() == 2);
  CHECK(result.scans[0].t == 0.0);
  CHECK(result.scans[0].targets[0].r == 5.5);
  CHECK(result.scans[0].targets[0].phi == 0.25);
  REQUIRE(result.scans[0].targets[0].v.has_value());
  CHECK(*result.scans[0].targets[0].v == -1.25);
  CHECK(*result.scans[0].targets[0].sigma_v == 0.1);
  CHECK_FALSE(result.scans[0].targets[1].v.has_value());
  CHECK(result.scans[1].t == 0.2);
}

TEST_CASE("scan reader drops nonpositive ranges and truncates long scans") {
  TempDir dir;
  const std::string path = dir.file("scans.jsonl");
  std::string text =
      R"({"t": 0.0, "targets": [{"r": 0.0, "phi": 0, "sr": 0.1, "sphi": 0.01},)"
      R"({"r": 3.0, "phi": 0.5, "sr": 0.1, "sphi": 0.01},)"
      R"({"r": 4.0, "phi": 0.6, "sr": 0.1, "sphi": 0.01},)"
      R"({"r": 5.0, "phi": 0.7, "sr": 0.1, "sphi": 0.01}]})";
  write_text(path, text + "\n");
  const ScanReadResult result = read_scans(path, 2);
  REQUIRE(result.scans.size() == 1);
  CHECK(result.scans[0].targets.size() == 2);
  CHECK(result.dropped_zero_range == 1);
  CHECK(result.truncated == 1);
  CHECK(result.scans[0].targets[0].r == 3.0);
  CHECK(result.scans[0].targets[1].r == 4.0);
}

TEST_CASE("scan reader rejects bad input") {
  TempDir dir;
  const std::string path = dir.file("scans.jsonl");
  // Non-monotone timestamps.
  write_text(path,
             "{\"t\": 1.0, \"targets\": []}\n{\"t\": 0.5, \"targets\": []}\n");
  CHECK_THROWS_AS(read_scans(path), IoError);
  // Malformed JSON.
  write_text(path, "{not json\n");
  CHECK_THROWS_AS(read_scans(path), IoError);
  // Missing field.
  write_text(path, "{\"t\": 0.0, \"targets\": [{\"r\": 1.0}]}\n");
  CHECK_THROWS_AS(read_scans(path), IoError);
  // Missing file.
  CHECK_THROWS_AS(read_scans(dir.file("absent.jsonl")), IoError);
}

TEST_CASE("point sets round-trip in both dimensions") {
  TempDir dir;
  SUBCASE("2d") {
    const ScenarioInstance inst = generate(ScenarioSpec::overlapped2d(5));
    const std::string path = dir.file("f.json");
    write_point_set(path, inst.f);
    const PointSet back = read_point_set(path);
    CHECK(back.dim == 2);
    CHECK(back.label == SetLabel::previous);
    REQUIRE(back.targets.size() == inst.f.targets.size());
    for (size_t i = 0; i < back.targets.size(); ++i) {
      CHECK(back.targets[i].mu.x() == inst.f.targets[i].mu.x());
      CHECK(back.targets[i].mu.y() == inst.f.targets[i].mu.y());
      CHECK(back.targets[i].cov(0, 1) == inst.f.targets[i].cov(0, 1));
    }
  }
  SUBCASE("1d") {
    const ScenarioInstance inst = generate(ScenarioSpec::oned_basic(5));
    const std::string path = dir.file("m.json");
    write_point_set(path, inst.m);
    const PointSet back = read_point_set(path);
    CHECK(back.dim == 1);
    CHECK(back.label == SetLabel::current);
    REQUIRE(back.targets.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
      CHECK(back.targets[i].mu.x() == inst.m.targets[i].mu.x());
      CHECK(back.targets[i].mu.y() == 0.0);
      CHECK(back.targets[i].cov(0, 0) == inst.m.targets[i].cov(0, 0));
    }
  }
  SUBCASE("shape errors") {
    const std::string path = dir.file("bad.json");
    write_text(path, R"({"dim": 3, "targets": []})");
    CHECK_THROWS_AS(read_point_set(path), IoError);
    write_text(path, R"({"dim": 1, "targets": [{"mu": [1, 2], "cov": [[1]]}]})");
    CHECK_THROWS_AS(read_point_set(path), IoError);
  }
}

TEST_CASE("ground truth csv round-trips") {
  TempDir dir;
  const std::string path = dir.file("gt.csv");
  std::vector<GroundTruthRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[static_cast<size_t>(i)].t = 0.2 * (i + 1);
    rows[static_cast<size_t>(i)].vx = 2.0 + 0.1 * i;
    rows[static_cast<size_t>(i)].vy = -0.05;
    rows[static_cast<size_t>(i)].omega = 0.125;
  }
  write_ground_truth(path, rows);
  const auto back = read_ground_truth(path);
  REQUIRE(back.size() == 3);
  CHECK(back[0].t == rows[0].t);
  CHECK(back[2].vx == rows[2].vx);
  CHECK(back[1].vy == rows[1].vy);
  CHECK(back[0].omega == rows[0].omega);

  write_text(path, "t,vx,vy,omega\n0.2,1.0,nope,0\n");
  CHECK_THROWS_AS(read_ground_truth(path), IoError);
}

TEST_CASE("csv numbers survive a strtod round-trip") {
  for (double v : {1.0 / 3.0, 1e-308, -2.5e17, 0.1, M_PI, -0.0}) {
    const std::string s = csv_num(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("manifests round-trip and reject junk") {
  TempDir dir;
  const std::string path = dir.file("manifest.json");
  RunManifest m;
  m.command = "scenario";
  m.seed = 42;
  m.config = {{"kind", "oned_basic"}, {"sigma_r", 0.15}};
  m.inputs = {};
  m.outputs = {"instance.json", "f.json"};
  write_manifest(path, m);
  const RunManifest back = read_manifest(path);
  CHECK(back.command == "scenario");
  CHECK(back.version == std::string(kToolVersion));
  CHECK(back.seed == 42);
  CHECK(back.config["kind"] == "oned_basic");
  CHECK(back.config["sigma_r"] == 0.15);
  REQUIRE(back.outputs.size() == 2);
  CHECK(back.outputs[1] == "f.json");

  write_text(path, "{\"version\": \"x\"}");
  CHECK_THROWS_AS(read_manifest(path), IoError);
  write_text(path, "not json at all");
  CHECK_THROWS_AS(read_manifest(path), IoError);
}

TEST_CASE("matrix json helpers") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Eigen::MatrixXd back = mat_from_json(mat_to_json(m));
  CHECK((back.array() == m.array()).all());
  CHECK_THROWS_AS(mat_from_json(nlohmann::json::array()), IoError);
  nlohmann::json ragged = {{1.0, 2.0}, {3.0}};
  CHECK_THROWS_AS(mat_from_json(ragged), IoError);
}

// --- in-process CLI ------------------------------------------------------------

TEST_CASE("cli scenario then register succeed end to end") {
  TempDir dir;
  const std::string out = dir.path.string();
  CHECK(cli::run({"scenario", "--kind", "oned_basic", "--seed", "7", "--out",
                  out}) == 0);
  CHECK(fs::exists(dir.path / "f.json"));
  CHECK(fs::exists(dir.path / "m.json"));
  CHECK(fs::exists(dir.path / "instance.json"));
  CHECK(fs::exists(dir.path / "manifest.json"));

  const std::string reg = (dir.path / "reg").string();
  CHECK(cli::run({"register", "--f", dir.file("f.json"), "--m",
                  dir.file("m.json"), "--init-tx", "2.0", "--out", reg}) == 0);
  CHECK(fs::exists(fs::path(reg) / "result.json"));
  CHECK(fs::exists(fs::path(reg) / "trace.csv"));
  const auto result =
      nlohmann::json::parse(read_text((fs::path(reg) / "result.json").string()));
  CHECK(result["converged"].get<bool>());
  CHECK(std::fabs(result["theta_hat"]["tx"].get<double>() - 2.0) < 0.5);
}

TEST_CASE("cli exit codes distinguish failure families") {
  TempDir dir;
  // Unknown flag -> usage error.
  CHECK(cli::run({"scenario", "--kind", "oned_basic", "--no-such-flag"}) == 1);
  // Unknown subcommand -> usage error.
  CHECK(cli::run({"frobnicate"}) == 1);
  // Missing input file -> I/O error.
  CHECK(cli::run({"register", "--f", dir.file("absent.json"), "--m",
                  dir.file("absent2.json"), "--out", dir.path.string()}) == 2);
  // Numerical/config failure (grid budget exceeded) -> 3.
  const std::string out = dir.path.string();
  REQUIRE(cli::run({"scenario", "--kind", "overlapped2d", "--seed", "3",
                    "--out", out}) == 0);
  CHECK(cli::run({"surface", "--f", dir.file("f.json"), "--m",
                  dir.file("m.json"), "--tx-min", "-5", "--tx-max", "5",
                  "--tx-count", "300", "--ty-min", "-5", "--ty-max", "5",
                  "--ty-count", "300", "--phi-min", "-0.5", "--phi-max", "0.5",
                  "--phi-count", "300", "--out", out}) == 3);
}

TEST_CASE("cli manifest replay reproduces outputs byte for byte") {
  TempDir dir;
  const std::string out = (dir.path / "a").string();
  REQUIRE(cli::run({"scenario", "--kind", "overlapped2d", "--seed", "11",
                    "--out", out}) == 0);
  const std::string f_first = read_text((fs::path(out) / "f.json").string());
  const std::string scans_first =
      read_text((fs::path(out) / "scans.jsonl").string());

  REQUIRE(cli::run({"replay", (fs::path(out) / "manifest.json").string()}) == 0);
  CHECK(read_text((fs::path(out) / "f.json").string()) == f_first);
  CHECK(read_text((fs::path(out) / "scans.jsonl").string()) == scans_first);
}
