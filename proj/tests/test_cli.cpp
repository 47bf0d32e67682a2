#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("lsmi_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

struct Run {
  int code;
  std::string out;
};

Run lsmi(const std::string& args, const fs::path& dir) {
  const auto log = dir / "stdout.txt";
  const std::string cmd = std::string(LSMI_CLI) + " " + args + " > " +
                          log.string() + " 2> " + (dir / "stderr.txt").string();
  const int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(log)};
}

std::size_t lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

const char* kFastPipeline =
    R"("pipeline": {"density": {"steps": 500}, "discriminator": {"steps": 1000}})";

}  // namespace

TEST_CASE("gen writes a reproducible dataset") {
  const auto dir = scratch("gen");
  put(dir / "cfg.json",
      R"({"seed": 5, "gen": {"type": "logic", "gate": "OR", "n": 500}})");
  const auto cfg = (dir / "cfg.json").string();
  REQUIRE(lsmi("gen --config " + cfg + " --out " + (dir / "a").string(), dir)
              .code == 0);
  REQUIRE(lsmi("gen --config " + cfg + " --out " + (dir / "b.jsonl").string(),
               dir)
              .code == 0);
  const auto a = slurp(dir / "a" / "dataset.jsonl");
  CHECK(lines(a) == 501);
  CHECK(a == slurp(dir / "b.jsonl"));

  REQUIRE(lsmi("gen --config " + cfg + " --seed 6 --out " +
                   (dir / "c.jsonl").string(),
               dir)
              .code == 0);
  CHECK(a != slurp(dir / "c.jsonl"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  put(dir / "bad.json",
      R"({"gen": {"type": "preset", "fractions": [0.5, 0.5, 0.5, 0]}})");
  CHECK(lsmi("gen --config " + (dir / "bad.json").string() + " --out " +
                 (dir / "x").string(),
             dir)
            .code == 2);
  CHECK(slurp(dir / "stderr.txt").find("fractions") != std::string::npos);

  const auto out = dir / "missing_run";
  CHECK(lsmi("estimate --dataset " + (dir / "nope.jsonl").string() +
                 " --out " + out.string(),
             dir)
            .code == 1);
  CHECK_FALSE(fs::exists(out));

  CHECK(lsmi("estimate --units furlongs", dir).code == 2);
  CHECK(lsmi("frobnicate", dir).code == 2);
  CHECK(lsmi("oracle --out " + (dir / "o").string(), dir).code == 2);

  put(dir / "broken.json", "{ nope");
  CHECK(lsmi("gen --config " + (dir / "broken.json").string(), dir).code == 2);
  CHECK(lsmi("gen --config " + (dir / "absent.json").string(), dir).code == 1);
}

TEST_CASE("oracle on logic gates") {
  const auto dir = scratch("oracle");
  put(dir / "or.json", R"({"oracle": {"gate": "OR"}})");
  REQUIRE(lsmi("oracle --config " + (dir / "or.json").string() + " --out " +
                   (dir / "or").string(),
               dir)
              .code == 0);
  const auto s = json::parse(slurp(dir / "or" / "summary.json"));
  CHECK(s["average"]["r"].get<double>() == doctest::Approx(0.389048).epsilon(1e-5));
  CHECK(s["average"]["u1"].get<double>() == doctest::Approx(-0.173287).epsilon(1e-5));
  CHECK(s["average"]["s"].get<double>() == doctest::Approx(0.51986).epsilon(1e-5));

  put(dir / "xor.json", R"({"oracle": {"gate": "XOR"}})");
  REQUIRE(lsmi("oracle --config " + (dir / "xor.json").string() +
                   " --units bits --out " + (dir / "xor").string(),
               dir)
              .code == 0);
  const auto x = json::parse(slurp(dir / "xor" / "summary.json"));
  CHECK(x["units"] == "bits");
  CHECK(x["average"]["s"].get<double>() == doctest::Approx(1.0));
  CHECK(x["average"]["r"].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("single-class model oracle is all zeros") {
  const auto dir = scratch("k1");
  put(dir / "k1.json", R"({"oracle": {"n": 300, "model": {
    "K": 1, "d": 2, "pi": [1.0], "mu": [[0.5, -1.0]],
    "sigma": [[[1.0, 0.2], [0.2, 1.0]]], "rho": 0.4}}})");
  REQUIRE(lsmi("oracle --config " + (dir / "k1.json").string() + " --out " +
                   (dir / "run").string(),
               dir)
              .code == 0);
  const auto csv = slurp(dir / "run" / "report.csv");
  CHECK(lines(csv) == 301);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    for (int i = 0; i < 6; ++i) std::getline(cells, cell, ',');
    CHECK(cell == "0");
  }
}

TEST_CASE("estimate, compare and determinism") {
  const auto dir = scratch("estimate");
  put(dir / "cfg.json", std::string(R"({"seed": 3,
    "gen": {"type": "logic", "gate": "XOR", "n": 2000}, )") +
                            kFastPipeline + "}");
  const auto cfg = (dir / "cfg.json").string();
  const auto data = (dir / "d.jsonl").string();
  REQUIRE(lsmi("gen --config " + cfg + " --out " + data, dir).code == 0);
  for (const char* run : {"r1", "r2"})
    REQUIRE(lsmi("estimate --config " + cfg + " --dataset " + data +
                     " --out " + (dir / run).string(),
                 dir)
                .code == 0);
  CHECK(lsmi("estimate --config " + cfg + " --dataset " + data + " --out " +
                 (dir / "r3").string(),
             dir)
            .out.find("S") != std::string::npos);
  const auto csv1 = slurp(dir / "r1" / "report.csv");
  CHECK(lines(csv1) == 2001);
  CHECK(csv1 == slurp(dir / "r2" / "report.csv"));
  CHECK(slurp(dir / "r1" / "summary.json") ==
        slurp(dir / "r2" / "summary.json"));
  CHECK(fs::is_regular_file(dir / "r1" / "timings.json"));

  const auto a = (dir / "r1" / "report.csv").string();
  const auto same = lsmi(
      "compare --a " + a + " --b " + a + " --out " + (dir / "cmp").string(),
      dir);
  REQUIRE(same.code == 0);
  const auto j = json::parse(slurp(dir / "cmp" / "compare.json"));
  for (const char* k : {"r", "u1", "u2", "s"}) {
    CHECK(j["components"][k]["mad"] == 0.0);
    CHECK(j["components"][k]["max_abs"] == 0.0);
  }

  std::string truncated = csv1.substr(0, csv1.rfind('\n', csv1.size() - 2) + 1);
  put(dir / "short.csv", truncated);
  CHECK(lsmi("compare --a " + a + " --b " + (dir / "short.csv").string(), dir)
            .code == 2);
  CHECK(lsmi("compare --a " + a + " --b " + (dir / "none.csv").string(), dir)
            .code == 1);

  REQUIRE(lsmi("estimate --config " + cfg + " --dataset " + data +
                   " --units bits --out " + (dir / "bits").string(),
               dir)
              .code == 0);
  const auto nats = json::parse(slurp(dir / "r1" / "summary.json"));
  const auto bits = json::parse(slurp(dir / "bits" / "summary.json"));
  CHECK(bits["average"]["s"].get<double>() ==
        doctest::Approx(nats["average"]["s"].get<double>() / std::log(2.0)));
}

TEST_CASE("three modalities write one report per pair") {
  const auto dir = scratch("pairs");
  put(dir / "cfg.json", std::string(R"({"seed": 2,
    "gen": {"type": "logic", "gate": "AND", "n": 1000,
            "extra_modalities": [{"kind": "copy", "source": 1}]}, )") +
                            kFastPipeline + "}");
  const auto cfg = (dir / "cfg.json").string();
  const auto data = (dir / "d.jsonl").string();
  REQUIRE(lsmi("gen --config " + cfg + " --out " + data, dir).code == 0);
  REQUIRE(lsmi("estimate --config " + cfg + " --dataset " + data + " --out " +
                   (dir / "run").string(),
               dir)
              .code == 0);
  for (const char* p : {"pair_1_2", "pair_1_3", "pair_2_3"})
    CHECK(fs::is_regular_file(dir / "run" / p / "report.csv"));
}

TEST_CASE("bench prints rows and a ratio") {
  const auto dir = scratch("bench");
  put(dir / "cfg.json",
      R"({"bench": {"classes": [2, 5], "n": 1000, "d": 4,
                    "density": {"steps": 50}}})");
  const auto r = lsmi("bench --config " + (dir / "cfg.json").string() +
                          " --out " + (dir / "b").string(),
                      dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("K,stage,seconds\n", 0) == 0);
  CHECK(r.out.find("ratio ") != std::string::npos);
  CHECK(lines(slurp(dir / "b" / "bench.csv")) == 11);
}
