#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "rslam/app.hpp"
#include "rslam/io.hpp"
#include "support/scenes.hpp"

using namespace rslam;
using namespace rslam::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rslam_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

struct Run {
  int code;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "rslam");
  std::ostringstream err, out;
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  const int code = run_cli(args);
  std::cerr.rdbuf(old_err);
  std::cout.rdbuf(old_out);
  return {code, err.str()};
}

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

double rmse_from_metrics(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("RMSE,", 0) == 0) return std::stod(line.substr(5));
  }
  return -1.0;
}

std::string office_scene_file(const TempDir& dir) {
  const std::string p = dir / "scene.json";
  spit(p, io::scene_to_json(office_scene()).dump());
  return p;
}

std::string placements_file(const TempDir& dir, std::size_t n, std::uint64_t seed) {
  nlohmann::json j = nlohmann::json::array();
  for (const UePlacement& u : office_placements(n, seed)) {
    j.push_back({u.position.x(), u.position.y()});
  }
  const std::string p = dir / "pos.json";
  spit(p, j.dump());
  return p;
}

}  // namespace

TEST_CASE("simulate writes one line per position, reproducibly") {
  TempDir dir;
  const std::string scene = office_scene_file(dir);
  const std::string pos = placements_file(dir, 45, 2);
  REQUIRE(run({"simulate", "--scene", scene, "--positions", pos, "--seed", "5", "--out",
               dir / "a.jsonl"})
              .code == kExitOk);
  REQUIRE(run({"--seed", "5", "simulate", "--scene", scene, "--positions", pos, "--out",
               dir / "b.jsonl"})
              .code == kExitOk);
  REQUIRE(run({"simulate", "--scene", scene, "--positions", pos, "--seed", "6", "--out",
               dir / "c.jsonl"})
              .code == kExitOk);
  const std::string a = slurp(dir / "a.jsonl");
  CHECK(line_count(a) == 45);
  CHECK(a == slurp(dir / "b.jsonl"));
  CHECK(a != slurp(dir / "c.jsonl"));
}

TEST_CASE("validation errors exit with code 2") {
  TempDir dir;
  const std::string pos = placements_file(dir, 3, 2);
  spit(dir / "bad.json",
       R"({"bs":{"pos":[0,0],"ori":0},"walls":[[[-10,-8],[12,-8],3],[[1,1],[1,1],3]]})");
  const Run bad = run({"simulate", "--scene", dir / "bad.json", "--positions", pos, "--out",
                       dir / "x.jsonl"});
  CHECK(bad.code == kExitValidation);
  CHECK(bad.err.find("wall 1") != std::string::npos);

  CHECK(run({"simulate", "--scene", dir / "missing.json", "--positions", pos, "--out",
             dir / "x.jsonl"})
            .code == kExitValidation);
  CHECK(run({"solve", "--dataset", dir / "x.jsonl", "--mode", "magic", "--out", dir / "y"}).code ==
        kExitValidation);
  CHECK(run({"frobnicate"}).code == kExitValidation);
  CHECK(run({"--t_eps", "-1", "simulate", "--scene", office_scene_file(dir), "--positions", pos,
             "--out", dir / "x.jsonl"})
            .code == kExitValidation);
  CHECK(run({"--help"}).code == kExitOk);

  spit(dir / "empty.jsonl", "\n");
  CHECK(run({"solve", "--dataset", dir / "empty.jsonl", "--out", dir / "y.jsonl"}).code ==
        kExitValidation);
}

TEST_CASE("noiseless LoS room solves exactly") {
  TempDir dir;
  Scene s;
  s.bs = Pose(Vec2(0, 0), 0.4);
  s.walls = room_walls(Room{Vec2(1, 0.5), 8.0, 6.0, 0.1});
  spit(dir / "room.json", io::scene_to_json(s).dump());
  spit(dir / "pos.json", "[[4, 2], [-3, 3, 1.0], [5, -4], [-6, -2]]");
  const std::vector<std::string> zero{"--sigma_toa_ns", "0", "--sigma_aod_deg", "0",
                                      "--sigma_aoa_deg", "0", "--sigma_db", "0"};
  std::vector<std::string> sim{"simulate", "--scene", dir / "room.json", "--positions",
                               dir / "pos.json", "--max_bounces", "1", "--out", dir / "d.jsonl"};
  sim.insert(sim.end(), zero.begin(), zero.end());
  REQUIRE(run(sim).code == kExitOk);

  REQUIRE(run({"solve", "--dataset", dir / "d.jsonl", "--out", dir / "sol.jsonl"}).code ==
          kExitOk);
  const std::string metrics = slurp(dir / "sol.metrics.csv");
  CHECK(line_count(metrics) == 1 + 4 + 2);
  CHECK(rmse_from_metrics(metrics) <= 1e-6);
  CHECK(metrics.find("time_ms") == std::string::npos);

  std::istringstream lines(slurp(dir / "sol.jsonl"));
  std::string line;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["status"] == "ok");
    CHECK(j["hypothesis"] == "H0");
  }

  REQUIRE(run({"solve", "--dataset", dir / "d.jsonl", "--out", dir / "t.jsonl", "--timing",
               "--metrics", dir / "m.csv"})
              .code == kExitOk);
  CHECK(slurp(dir / "m.csv").find("time_ms") != std::string::npos);
}

TEST_CASE("datasets without truth") {
  TempDir dir;
  REQUIRE(run({"simulate", "--scene", office_scene_file(dir), "--positions",
               placements_file(dir, 6, 3), "--out", dir / "d.jsonl"})
              .code == kExitOk);
  std::istringstream in(slurp(dir / "d.jsonl"));
  std::string stripped, line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    j["truth"] = nullptr;
    stripped += j.dump() + "\n";
  }
  spit(dir / "blind.jsonl", stripped);

  const Run solved = run({"solve", "--dataset", dir / "blind.jsonl", "--out", dir / "s.jsonl"});
  CHECK(solved.code == kExitOk);
  CHECK(solved.err.find("no ground truth") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "s.metrics.csv"));
  CHECK(line_count(slurp(dir / "s.jsonl")) == 6);

  CHECK(run({"sweep", "--dataset", dir / "blind.jsonl", "--out", dir / "sw.csv"}).code ==
        kExitValidation);
  CHECK(run({"solve", "--dataset", dir / "blind.jsonl", "--strip_outliers", "--out",
             dir / "s2.jsonl"})
            .code == kExitValidation);
}

TEST_CASE("every snapshot failing exits with code 3") {
  TempDir dir;
  spit(dir / "one.jsonl",
       R"({"id":"a","bs":{"pos":[0,0],"ori":0},"paths":[{"toa_ns":10,"aod_rad":0.1,"aoa_rad":0.2,"gain":1}],"truth":null})"
       "\n");
  CHECK(run({"solve", "--dataset", dir / "one.jsonl", "--out", dir / "o.jsonl"}).code ==
        kExitSolverFailure);
  const auto j = nlohmann::json::parse(slurp(dir / "o.jsonl"));
  CHECK(j["status"] == "failed");
  CHECK_FALSE(j["error"].get<std::string>().empty());
}

TEST_CASE("config file, flag override and environment") {
  TempDir dir;
  const std::string scene = office_scene_file(dir);
  const std::string pos = placements_file(dir, 5, 4);
  spit(dir / "cfg.toml", "seed = 7\nmax_bounces = 1\n");

  auto simulate = [&](std::vector<std::string> extra, const std::string& out) {
    std::vector<std::string> a{"simulate", "--scene", scene, "--positions", pos, "--out", dir / out};
    a.insert(a.end(), extra.begin(), extra.end());
    REQUIRE(run(a).code == kExitOk);
    return slurp(dir / out);
  };
  const std::string from_flags = simulate({"--seed", "7", "--max_bounces", "1"}, "f.jsonl");
  const std::string from_file = simulate({"--config", dir / "cfg.toml"}, "c.jsonl");
  CHECK(from_file == from_flags);

  const std::string overridden = simulate({"--config", dir / "cfg.toml", "--seed", "8"}, "o.jsonl");
  CHECK(overridden == simulate({"--seed", "8", "--max_bounces", "1"}, "o2.jsonl"));
  CHECK(overridden != from_file);

  ::setenv("RSLAM_CONFIG", (dir / "cfg.toml").c_str(), 1);
  const std::string from_env = simulate({}, "e.jsonl");
  ::unsetenv("RSLAM_CONFIG");
  CHECK(from_env == from_flags);
}

TEST_CASE("solve and sweep are independent of the worker count") {
  TempDir dir;
  REQUIRE(run({"simulate", "--scene", office_scene_file(dir), "--positions",
               placements_file(dir, 12, 5), "--out", dir / "d.jsonl"})
              .code == kExitOk);
  for (const char* w : {"1", "4"}) {
    const std::string tag = w;
    REQUIRE(run({"--workers", w, "solve", "--dataset", dir / "d.jsonl", "--out",
                 dir / ("s" + tag + ".jsonl")})
                .code == kExitOk);
    REQUIRE(run({"--workers", w, "sweep", "--dataset", dir / "d.jsonl", "--trials", "40",
                 "--p_grid", "0:0.5:1", "--out", dir / ("w" + tag + ".csv")})
                .code == kExitOk);
  }
  CHECK(slurp(dir / "s1.jsonl") == slurp(dir / "s4.jsonl"));
  CHECK(slurp(dir / "s1.metrics.csv") == slurp(dir / "s4.metrics.csv"));
  CHECK(slurp(dir / "w1.csv") == slurp(dir / "w4.csv"));
  CHECK(line_count(slurp(dir / "w1.csv")) == 4);
}

TEST_CASE("robust solve beats the benchmark on a multipath dataset") {
  TempDir dir;
  REQUIRE(run({"simulate", "--scene", office_scene_file(dir), "--positions",
               placements_file(dir, 30, 6), "--out", dir / "d.jsonl"})
              .code == kExitOk);
  REQUIRE(run({"solve", "--dataset", dir / "d.jsonl", "--out", dir / "r.jsonl"}).code == kExitOk);
  REQUIRE(run({"solve", "--dataset", dir / "d.jsonl", "--mode", "benchmark", "--out",
               dir / "b.jsonl"})
              .code == kExitOk);
  const double robust = rmse_from_metrics(slurp(dir / "r.metrics.csv"));
  const double bench = rmse_from_metrics(slurp(dir / "b.metrics.csv"));
  CHECK(robust >= 0.0);
  CHECK(robust < bench);
}

TEST_CASE("simulate --relabel_consistent only changes labels") {
  TempDir dir;
  const std::string scene = office_scene_file(dir);
  const std::string pos = placements_file(dir, 20, 7);
  const std::vector<std::string> base{"simulate", "--scene", scene, "--positions", pos,
                                      "--max_bounces", "3"};
  auto a = base;
  a.insert(a.end(), {"--out", dir / "a.jsonl"});
  auto b = base;
  b.insert(b.end(), {"--relabel_consistent", "--out", dir / "b.jsonl"});
  REQUIRE(run(a).code == kExitOk);
  REQUIRE(run(b).code == kExitOk);
  std::istringstream ia(slurp(dir / "a.jsonl")), ib(slurp(dir / "b.jsonl"));
  std::string la, lb;
  std::size_t multi_a = 0, multi_b = 0;
  while (std::getline(ia, la) && std::getline(ib, lb)) {
    const auto ja = nlohmann::json::parse(la);
    const auto jb = nlohmann::json::parse(lb);
    CHECK(ja["paths"] == jb["paths"]);
    for (const auto& l : ja["truth"]["labels"]) multi_a += l == "multi";
    for (const auto& l : jb["truth"]["labels"]) multi_b += l == "multi";
  }
  CHECK(multi_b < multi_a);
}
