#include "test_support.hpp"

#include "hcap/cli.hpp"
#include "hcap/config.hpp"

#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

using namespace hcap;
using namespace hcap::test;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "hcap");
  std::vector<const char*> argv;
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  return runCli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void writeText(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

const char* kTinyConfig = R"({
  "synth": {"frames": 2, "cameras": 3, "width": 120, "height": 120, "focal": 170.0, "noise_px": 0.5},
  "fit": {"pose": {"iterations": 80}, "deform": {"iterations": 5}}
})";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("index lists") {
  CHECK(parseIndexList("3") == std::vector<int>{3});
  CHECK(parseIndexList("0..3") == std::vector<int>{0, 1, 2, 3});
  CHECK(parseIndexList("4,0,2..3,2") == std::vector<int>{0, 2, 3, 4});
  CHECK_THROWS_AS(parseIndexList(""), std::invalid_argument);
  CHECK_THROWS_AS(parseIndexList("3..1"), std::invalid_argument);
  CHECK_THROWS_AS(parseIndexList("a"), std::invalid_argument);
  CHECK_THROWS_AS(parseIndexList("-1"), std::invalid_argument);
}

TEST_CASE("frame ranges") {
  CHECK(parseFrameRange("5") == std::pair<int, int>{5, 5});
  CHECK(parseFrameRange("2..7") == std::pair<int, int>{2, 7});
  CHECK_THROWS_AS(parseFrameRange("1,3"), std::invalid_argument);
  CHECK_THROWS_AS(parseFrameRange("1..2,5"), std::invalid_argument);
  CHECK_THROWS_AS(parseFrameRange("4..2"), std::invalid_argument);
}

TEST_CASE("config parsing is strict") {
  const auto c = parseRunConfig(R"({"fit": {"pose": {"iterations": 12}, "weights": {"arap": 5}}, "synth": {"seed": 9}})");
  CHECK(c.fit.pose.iterations == 12);
  CHECK(c.fit.pose.learningRate == FitConfig{}.pose.learningRate);
  CHECK(c.fit.weights.arap == 5.0);
  CHECK(c.synth.seed == 9);
  CHECK_THROWS_AS(parseRunConfig(R"({"fit": {"pose": {"iters": 12}}})"), std::invalid_argument);
  CHECK_THROWS_AS(parseRunConfig(R"({"other": 1})"), std::invalid_argument);
  CHECK_THROWS_AS(parseRunConfig(R"({"fit": {"warm_start": "yes"}})"), std::invalid_argument);
  CHECK_THROWS_AS(parseRunConfig(R"({"synth": {"drift": [1, 2]}})"), std::invalid_argument);
  CHECK_THROWS_AS(parseRunConfig(R"({"synth": {"cameras": 1}})"), std::invalid_argument);
  CHECK_THROWS_AS(parseRunConfig("{"), std::invalid_argument);
  CHECK_THROWS_AS(parseRunConfig(R"({"fit": {"smoothing_kernel": 2}})"), std::invalid_argument);
}

TEST_CASE("serialized config parses back to the same config") {
  RunConfig c;
  c.fit.pose.iterations = 77;
  c.fit.weights.silhouette = 0.25;
  c.synth.noisePx = 1.5;
  DeformationScript d;
  d.anchor = "l_wrist";
  d.translation = Vec3(0, 0, -0.05);
  d.profile = "ramp";
  c.synth.deformations.push_back(d);
  const std::string text = runConfigJson(c);
  const auto back = parseRunConfig(text);
  CHECK(runConfigJson(back) == text);
  CHECK(back.synth.deformations.size() == 1);
  CHECK(back.synth.deformations[0].anchor == "l_wrist");
}

TEST_CASE("FNV-1a digests") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(hexDigest(0xabcull) == "0000000000000abc");
}

TEST_CASE("exit codes") {
  TempDir dir("cli_codes");
  CHECK(run({}) == 2);
  CHECK(run({"fit"}) == 2);
  CHECK(run({"bogus"}) == 2);
  CHECK(run({"--help"}) == 0);
  CHECK(run({"fit", "--dataset", (dir.path() / "missing").string(), "--rig", HCAP_TEST_RIG, "--out", (dir.path() / "o").string()}) == 3);
  writeText(dir.path() / "bad.json", R"({"fit": {"unknown": 1}})");
  CHECK(run({"synth", "--config", (dir.path() / "bad.json").string(), "--out", (dir.path() / "ds").string(), "--rig", HCAP_TEST_RIG}) == 2);
  CHECK(run({"synth", "--out", (dir.path() / "ds").string(), "--rig", (dir.path() / "norig").string()}) == 3);
}

TEST_CASE("synth, fit, eval and export end to end") {
  TempDir dir("cli_e2e");
  const auto cfg = dir.path() / "cfg.json";
  writeText(cfg, kTinyConfig);
  const auto ds = dir.path() / "ds";
  REQUIRE(run({"synth", "--config", cfg.string(), "--out", ds.string(), "--rig", HCAP_TEST_RIG}) == 0);
  CHECK(fs::exists(ds / "meta.json"));
  CHECK(fs::exists(ds / "gt" / "0001.txt"));

  const auto fit1 = dir.path() / "fit1";
  const auto fit3 = dir.path() / "fit3";
  REQUIRE(run({"fit", "--dataset", ds.string(), "--rig", HCAP_TEST_RIG, "--config", cfg.string(), "--out", fit1.string()}) == 0);
  REQUIRE(run({"fit", "--dataset", ds.string(), "--rig", HCAP_TEST_RIG, "--config", cfg.string(), "--out", fit3.string(), "--jobs", "3"}) == 0);
  for (const char* f : {"0000.txt", "0001.txt"}) {
    CHECK(slurp(fit1 / "params" / f) == slurp(fit3 / "params" / f));
  }
  CHECK(run({"fit", "--dataset", ds.string(), "--rig", HCAP_TEST_RIG, "--out", fit1.string(), "--jobs", "0"}) == 2);
  CHECK(run({"fit", "--dataset", ds.string(), "--rig", HCAP_TEST_RIG, "--out", fit1.string(), "--cameras", "0..5"}) == 2);
  CHECK(run({"fit", "--dataset", ds.string(), "--rig", HCAP_TEST_RIG, "--out", fit1.string(), "--frames", "1..4"}) == 3);

  REQUIRE(run({"eval", "--pred", fit1.string(), "--gt", ds.string()}) == 0);
  const std::string csv = slurp(fit1 / "metrics.csv");
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == "gle_mm,pck3d,auc,mpjpe_mm,amviou,rviou,sviou");
  CHECK(std::count(row.begin(), row.end(), ',') == 6);
  REQUIRE(run({"eval", "--pred", fit1.string(), "--gt", ds.string()}) == 0);
  CHECK(slurp(fit1 / "metrics.csv") == csv);
  CHECK(run({"eval", "--pred", fit1.string(), "--gt", ds.string(), "--input-view", "9"}) == 2);

  const auto meshes = dir.path() / "meshes";
  REQUIRE(run({"export", "--pred", fit1.string(), "--out", meshes.string()}) == 0);
  const auto obj = readObj(meshes / "0001.obj");
  CHECK(obj.vertices.size() == shippedRig().mesh.vertices.size());
  CHECK(obj.faces == shippedRig().mesh.faces);
}

TEST_CASE("gradcheck subcommand") {
  TempDir dir("cli_gc");
  const auto out = dir.path() / "gc.csv";
  CHECK(run({"gradcheck", "--rig", HCAP_TEST_RIG, "--configs", "2", "--out", out.string()}) == 0);
  const std::string text = slurp(out);
  CHECK(text.rfind("config,objective,block,max_rel_error\n", 0) == 0);
  CHECK(run({"gradcheck", "--rig", HCAP_TEST_RIG, "--configs", "0"}) == 2);
}

}
