#include "fracquench/config.hpp"
#include "fracquench/experiment.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fracquench;
using namespace fracquench::config;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fracquench_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST_CASE("run config round trip") {
  RunConfig c;
  c.alpha = 0.3;
  c.length = 2.5;
  c.source.family = "affine";
  c.source.slope = 0.25;
  c.u0 = {"bump", 0.2};
  c.grid.nx = 128;
  c.time.policy = "uniform";
  c.time.dt0 = 1.0 / 3.0;
  c.time.soe = true;
  c.detect.eps_q = 1e-3;
  c.verify.refinements = 3;
  c.output = "somewhere";
  const RunConfig back = run_config_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(back == c);
  CHECK(run_config_from_json(nlohmann::json::parse(to_json(back).dump())) == back);
  // Missing keys keep their defaults.
  CHECK(run_config_from_json(nlohmann::json::parse("{}")) == RunConfig{});
}

TEST_CASE("sweep config round trip") {
  SweepConfig s;
  s.alpha = {0.3, 0.5};
  s.length = {1.0, 4.0};
  s.kappa = {1.0};
  s.width = 3;
  s.base.grid.nx = 32;
  const SweepConfig back = sweep_config_from_json(nlohmann::json::parse(to_json(s).dump()));
  CHECK(back == s);
  CHECK(back.cells() == 4);
  CHECK(back.cell(3).alpha == 0.5);
  CHECK(back.cell(3).length == 4.0);
  CHECK(back.cell(1).length == 4.0);
  CHECK(back.cell(1).alpha == 0.3);
}

TEST_CASE("parse errors carry line and column") {
  const std::string text = "{\n  \"alpha\": 0.5,\n  \"L\": ,\n}\n";
  CHECK_THROWS_WITH_AS(parse_text(text, "cfg.json"), doctest::Contains("cfg.json:3:"), ConfigError);
}

TEST_CASE("validation names the field") {
  auto rejects = [](const std::string& text, const std::string& field) {
    CAPTURE(text);
    const std::string needle = field + ":";
    CHECK_THROWS_WITH_AS(run_config_from_json(nlohmann::json::parse(text)).validate(),
                         doctest::Contains(needle.c_str()), ConfigError);
  };
  rejects(R"({"u_star": 0})", "u_star");
  rejects(R"({"u_star": -1})", "u_star");
  rejects(R"({"alpha": 1.0})", "alpha");
  rejects(R"({"grid": {"nx": 15}})", "grid.nx");
  rejects(R"({"time": {"policy": "adaptive"}})", "time.policy");
  rejects(R"({"u0": {"family": "bump", "amplitude": 2}})", "u0.amplitude");
  rejects(R"({"source": {"family": "cubic"}})", "source.family");
  CHECK_THROWS_WITH_AS(run_config_from_json(nlohmann::json::parse(R"({"time": {"dtt": 1}})")),
                       doctest::Contains("time.dtt: unknown key"), ConfigError);
  CHECK_THROWS_WITH_AS(run_config_from_json(nlohmann::json::parse(R"({"alpha": "half"})")),
                       doctest::Contains("alpha:"), ConfigError);
}

TEST_CASE("empty sweep axis is rejected") {
  SweepConfig s;
  s.alpha = {0.5};
  s.length = {};
  s.kappa = {1.0};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("L:"), ConfigError);
}

TEST_CASE("run writes exactly five parseable artifacts, deterministically") {
  const fs::path dir = scratch("run");
  write(dir / "run.json", R"({"alpha": 0.5, "L": 4})");
  std::ostringstream log;
  CHECK(experiment::cmd_run((dir / "run.json").string(), (dir / "a").string(), log) == 0);
  CHECK(experiment::cmd_run((dir / "run.json").string(), (dir / "b").string(), log) == 0);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir / "a")) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"profile_000.csv", "profile_001.csv", "quench_report.json",
                                          "trajectory.csv", "verify_report.json"});
  for (const auto& n : names) {
    CHECK(read(dir / "a" / n) == read(dir / "b" / n));
    if (n.ends_with(".json")) CHECK_FALSE(nlohmann::json::parse(read(dir / "a" / n)).is_discarded());
  }
  const auto q = nlohmann::json::parse(read(dir / "a" / "quench_report.json"));
  CHECK(q["quenched"] == true);
  CHECK(q["x_star_at_neumann_end"] == true);
  const auto v = nlohmann::json::parse(read(dir / "a" / "verify_report.json"));
  CHECK(v["verdict"] == "pass");
  for (const auto& c : v["checks"]) {
    CHECK(c.contains("witness"));
    if (c["status"] == "fail") CHECK_FALSE(c["witness"].is_null());
  }
}

TEST_CASE("failing checks do not change the exit status") {
  const fs::path dir = scratch("decay");
  write(dir / "run.json",
        R"({"alpha": 0.5, "L": 1, "source": {"family": "zero"}, "u0": {"family": "bump", "amplitude": 0.5},
            "time": {"t_max": 0.5}})");
  std::ostringstream log;
  CHECK(experiment::cmd_run((dir / "run.json").string(), (dir / "o").string(), log) == 0);
  const auto v = nlohmann::json::parse(read(dir / "o" / "verify_report.json"));
  CHECK(v["verdict"] == "fail");
  write(dir / "bad.json", R"({"u_star": 0})");
  CHECK_THROWS_WITH_AS(experiment::cmd_run((dir / "bad.json").string(), std::nullopt, log),
                       doctest::Contains("u_star"), ConfigError);
}

TEST_CASE("sweep summary is independent of width") {
  const fs::path dir = scratch("sweep");
  write(dir / "sweep.json", R"({"alpha": [0.5, 0.8], "L": [1, 4], "base": {"grid": {"nx": 32}, "time": {"t_max": 2}}})");
  std::ostringstream log;
  CHECK(experiment::cmd_sweep((dir / "sweep.json").string(), (dir / "w1").string(), 1, log) == 0);
  CHECK(experiment::cmd_sweep((dir / "sweep.json").string(), (dir / "w4").string(), 4, log) == 0);
  const std::string a = read(dir / "w1" / "sweep_summary.csv");
  CHECK(a == read(dir / "w4" / "sweep_summary.csv"));
  CHECK(std::count(a.begin(), a.end(), '\n') == 5);
  CHECK(a.find("CRITICAL") == std::string::npos);
  CHECK(a.rfind("alpha,L,criterion,quenched,T_bracket_lo,T_bracket_hi,T_upper_bound,x_star", 0) == 0);
  for (int i = 0; i < 4; ++i) {
    const fs::path cell = dir / "w1" / ("cell_00" + std::to_string(i));
    CHECK(fs::exists(cell / "verify_report.json"));
    CHECK(read(cell / "trajectory.csv") == read(dir / "w4" / ("cell_00" + std::to_string(i)) / "trajectory.csv"));
  }
}

TEST_CASE("tied refinement and extrapolation") {
  RunConfig c;
  const auto r = experiment::refine(c, 2);
  CHECK(r.time.dt0 == doctest::Approx(1e-3 * std::pow(2.0, -3.0)));
  CHECK(r.time.increment_cap == doctest::Approx(0.0125));
  CHECK(r.detect.eps_q == doctest::Approx(0.01 / 16.0));
  CHECK(r.time.dt_min_factor == doctest::Approx(1e-18));
  // Geometric sequence T + c q^k extrapolates exactly.
  const auto t = experiment::richardson(1.0 + 0.1, 1.0 + 0.05, 1.0 + 0.025);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(experiment::richardson(1.0, 2.0, 4.0).has_value());
}

TEST_CASE("convergence tables") {
  const auto rows = experiment::convergence("caputo", 0.5, 3);
  REQUIRE(rows.size() == 3);
  CHECK_FALSE(rows[0].order.has_value());
  CHECK(*rows[2].order == doctest::Approx(1.5).epsilon(0.1));
  const std::string csv = experiment::convergence_csv(rows);
  CHECK(csv.rfind("study,level,step,error,observed_order\n", 0) == 0);
  CHECK_THROWS_AS(experiment::convergence("heat", 0.5, 3), std::invalid_argument);

  const auto ml = experiment::convergence("mlf", 0.5, 3);
  for (const auto& r : ml) CHECK(r.error < 1e-9);
}
