#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "impactpath/io/export.hpp"
#include "unit/dot_check.hpp"

namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"({
  "grid": {"nlat": 8, "nlon": 16, "nlev": 8},
  "model": {"n_steps": 80},
  "eruption": {"day": 2.0},
  "plan": {
    "masses_tg": [5.0, 20.0],
    "experiments": [{"label": "Ex1", "t_lower": 0.5, "t_upper": 0.75},
                    {"label": "Ex2", "t_lower": 0.5, "t_upper": 1.0}],
    "members": 2,
    "baseline_members": 3,
    "seed": 5
  },
  "output": {"dot_days": [0.0, 10.0], "dot_members": [0]},
  "bench": {"counts": [0, 7], "repetitions": 1, "steps": 5}
})";

struct Workspace {
  fs::path dir;

  explicit Workspace(const std::string& name) {
    dir = fs::temp_directory_path() / ("impactpath_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "small.json") << kSmallConfig;
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  std::string config() const { return (dir / "small.json").string(); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const Workspace& ws, const std::string& args) {
  const auto out = ws.dir / "stdout.txt";
  const auto err = ws.dir / "stderr.txt";
  const std::string cmd = std::string("IMPACTPATH_LOG=warn ") + IMPACTPATH_CLI_PATH + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("cli: usage and configuration errors") {
  Workspace ws("usage");
  CHECK(run(ws, "--help").code == 0);
  CHECK(run(ws, "").code == 2);
  CHECK(run(ws, "simulate").code == 2);
  CHECK(run(ws, "frobnicate").code == 2);

  const auto missing = run(ws, "experiment " + (ws.dir / "nope.json").string());
  CHECK(missing.code == 2);
  CHECK(missing.err.find("cannot read config file") != std::string::npos);

  std::ofstream(ws.dir / "bad.json") << "{\"plan\": {\"members\": 1}}";
  const auto bad = run(ws, "baseline " + (ws.dir / "bad.json").string());
  CHECK(bad.code == 2);
  CHECK(bad.err.find("plan") != std::string::npos);

  CHECK(run(ws, "simulate " + ws.config() + " --experiment Ex9").code == 2);
  CHECK(run(ws, "bench " + ws.config() + " --counts 3,x").code == 2);
}

TEST_CASE("cli: experiment writes a complete, reproducible artifact set") {
  Workspace ws("experiment");
  const auto a = run(ws, "experiment " + ws.config() + " --out " + (ws.dir / "a").string());
  REQUIRE(a.code == 0);
  const auto summary = slurp(ws.dir / "a/summary.csv");
  CHECK(a.out == summary);
  CHECK(count_lines(summary) == 1 + 2 * 2 * 16);
  CHECK(fs::exists(ws.dir / "a/baseline.json"));
  CHECK(fs::exists(ws.dir / "a/activation.csv"));
  CHECK(fs::exists(ws.dir / "a/members/5Tg/Ex1/member00.pathway.json"));
  CHECK(fs::exists(ws.dir / "a/members/20Tg/Ex2/member01.pathway.json"));
  CHECK_FALSE(fs::exists(ws.dir / "a/members/5Tg/Ex1/member01.day0.dot"));

  const auto dot = slurp(ws.dir / "a/members/20Tg/Ex2/member00.day10.dot");
  const auto g = dotcheck::parse(dot);
  CHECK(g.nodes.size() == 16);
  const auto day0 = dotcheck::parse(slurp(ws.dir / "a/members/20Tg/Ex2/member00.day0.dot"));
  for (const auto& [id, attrs] : day0.nodes) CHECK(attrs.at("fillcolor") == "gray");

  const auto manifest = slurp(ws.dir / "a/manifest.json");
  CHECK(manifest.find("\"summary.csv\"") != std::string::npos);
  CHECK(manifest.find("members/5Tg/Ex1/member00.pathway.json") != std::string::npos);
  CHECK(manifest.find("\"baseline/2\"") != std::string::npos);
  CHECK(manifest.find("\"eruption/1\"") != std::string::npos);

  const auto doc = impactpath::pathway_from_json(slurp(ws.dir / "a/members/5Tg/Ex1/member00.pathway.json"));
  CHECK(doc.n_steps == 80);
  CHECK(doc.pathway.n_rows() == 81);
  CHECK(doc.experiment == "Ex1");

  // Same config, different thread count, reused baseline: identical summary.
  const auto b = run(ws, "--threads 2 experiment " + ws.config() + " --baseline " +
                             (ws.dir / "a/baseline.json").string() + " --out " + (ws.dir / "b").string());
  REQUIRE(b.code == 0);
  CHECK(slurp(ws.dir / "b/summary.csv") == summary);
  CHECK_FALSE(fs::exists(ws.dir / "b/baseline.json"));

  const auto c = run(ws, "experiment " + ws.config() + " --experiments Ex2 --out " + (ws.dir / "c").string());
  REQUIRE(c.code == 0);
  CHECK(count_lines(c.out) == 1 + 2 * 16);
  CHECK(summary.find(c.out.substr(c.out.find('\n') + 1)) != std::string::npos);
}

TEST_CASE("cli: baseline, simulate and export-dot") {
  Workspace ws("simulate");
  REQUIRE(run(ws, "baseline " + ws.config() + " --out " + (ws.dir / "base").string()).code == 0);
  const auto base = impactpath::baseline_from_json(slurp(ws.dir / "base/baseline.json"));
  CHECK(base.n_members == 3);
  CHECK(base.series.size() == 16);

  const auto sim = run(ws, "simulate " + ws.config() + " --mass 20 --member 1 --baseline " +
                               (ws.dir / "base/baseline.json").string() + " --out " + (ws.dir / "sim").string());
  REQUIRE(sim.code == 0);
  const auto series = slurp(ws.dir / "sim/series.csv");
  CHECK(count_lines(series) == 82);
  CHECK(series.rfind("step,time_days,SO2(e),SO2(s)", 0) == 0);
  const auto doc = impactpath::pathway_from_json(slurp(ws.dir / "sim/pathway.json"));
  CHECK(doc.mass_tg == 20.0);
  CHECK(doc.seed.member_index == 1);
  CHECK(doc.experiment == "Ex2");

  const auto pathway = (ws.dir / "sim/pathway.json").string();
  const auto dot = run(ws, "export-dot " + pathway + " --day 10");
  REQUIRE(dot.code == 0);
  CHECK(dotcheck::parse(dot.out).edges.size() == 24);
  const auto active = run(ws, "export-dot " + pathway + " --day 10 --active-only --out " +
                                  (ws.dir / "d.dot").string());
  REQUIRE(active.code == 0);
  for (const auto& [e, attrs] : dotcheck::parse(slurp(ws.dir / "d.dot")).edges) CHECK(attrs.at("style") == "solid");
  CHECK(run(ws, "export-dot " + pathway + " --day 500").code == 1);
  CHECK(run(ws, "export-dot " + (ws.dir / "sim/series.csv").string() + " --day 1").code == 1);
}

TEST_CASE("cli: bench prints one CSV row per count") {
  Workspace ws("bench");
  const auto r = run(ws, "bench " + ws.config() + " --out " + (ws.dir / "bench.csv").string());
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == 3);
  CHECK(r.out.rfind("qoi_count,baseline_s_per_step,tracked_s_per_step,ratio\n0,", 0) == 0);
  CHECK(slurp(ws.dir / "bench.csv") == r.out);
}
