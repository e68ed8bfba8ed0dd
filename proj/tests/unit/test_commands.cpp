#include "racbf/commands.hpp"
#include "racbf/error.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace racbf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(RACBF_TEST_TMP) / "commands" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig line_config() {
  RunConfig c = load_run_config(std::string(RACBF_SOURCE_DIR) + "/configs/integrator_1d.toml");
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RACBF_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("commands") {
  TEST_CASE("solve is byte-identical across runs and reports residuals") {
    const RunConfig cfg = line_config();
    std::ostringstream log;
    const fs::path a = scratch("solve_a"), b = scratch("solve_b");
    const auto rep = cmd_solve(cfg, a.string(), log);
    cmd_solve(cfg, b.string(), log);
    CHECK(slurp(a / "value.ravg") == slurp(b / "value.ravg"));
    CHECK(rep["vi_pass_fraction"].get<double>() >= 0.99);
    CHECK(rep["steps"] == 100);
    const ValueGrid vg = load((a / "value.ravg").string());
    CHECK(vg.provenance["spec_hash"] == cfg.spec_hash());
  }

  TEST_CASE("simulate and eval") {
    const RunConfig cfg = line_config();
    std::ostringstream log;
    const fs::path s = scratch("sim");
    cmd_solve(cfg, s.string(), log);
    const std::string value = (s / "value.ravg").string();
    const std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    const fs::path r1 = scratch("sim_r1"), r2 = scratch("sim_r2");
    const auto j1 = cmd_simulate(cfg, value, r1.string(), seeds, false, log);
    cmd_simulate(cfg, value, r2.string(), seeds, false, log);
    for (std::uint64_t seed : seeds) {
      const std::string f = "episodes/episode_" + std::to_string(seed) + ".csv";
      CHECK(slurp(r1 / f) == slurp(r2 / f));
    }
    CHECK(slurp(r1 / "summary.csv") == slurp(r2 / "summary.csv"));
    CHECK(j1["episodes"] == 5);
    CHECK(j1.contains("in_target_inflated_pct"));

    const fs::path e = scratch("eval");
    const auto je = cmd_eval(cfg, r1.string(), e.string(), log);
    CHECK(je["unsafe_pct"] == j1["unsafe_pct"]);
    CHECK(je["in_target_pct"] == j1["in_target_pct"]);
    CHECK(je["reward_mean"] == j1["reward_mean"]);
    CHECK(je["delta_mean"] == j1["delta_mean"]);
  }

  TEST_CASE("value functions for other specs are refused unless forced") {
    RunConfig cfg = line_config();
    std::ostringstream log;
    const fs::path s = scratch("hash");
    cmd_solve(cfg, s.string(), log);
    RunConfig other = cfg;
    other.raw["solve"]["horizon"] = 2.0;
    CHECK_THROWS_AS(load_value_for(other, (s / "value.ravg").string(), false), ConfigError);
    CHECK(load_value_for(other, (s / "value.ravg").string(), true) != nullptr);
    CHECK_THROWS_AS(cmd_simulate(cfg, "", scratch("novalue").string(), {0}, false, log), ConfigError);
  }

  TEST_CASE("export merges runs per episode") {
    const fs::path in = scratch("export_in");
    {
      std::ofstream a(in / "a.csv");
      a << "seed,unsafe,reward,delta_0\n0,1,2.0,0.5\n1,0,4.0,-0.5\n";
      std::ofstream b(in / "b.csv");
      b << "episode,reward_10s,unsafe,delta_0\n0,4.0,0,1.5\n";
    }
    std::ostringstream log;
    const fs::path out = scratch("export_out");
    const auto j = cmd_export({(in / "a.csv").string(), (in / "b.csv").string()}, out.string(), log);
    CHECK(j["runs"] == 2);
    CHECK(j["episodes"] == 2);
    CHECK(j["unsafe_pct"].get<double>() == doctest::Approx(100.0 / 3));
    CHECK(slurp(out / "rewards.csv") == "episode,runs,reward_mean,reward_std\n0,2,3,1\n1,1,4,0\n");
    CHECK(slurp(out / "unsafe.csv") == "episode,runs,unsafe_pct\n0,2,50\n1,1,0\n");
    CHECK(slurp(out / "deltas.csv") == "episode,runs,delta_0_mean,delta_0_std\n0,2,1,0.5\n1,1,-0.5,0\n");

    std::ofstream bad(in / "bad.csv");
    bad << "seed,score\n0,1\n";
    bad.close();
    CHECK_THROWS_AS(cmd_export({(in / "bad.csv").string()}, out.string(), log), FormatError);
  }

  TEST_CASE("command line") {
    const std::string cfg = std::string(RACBF_SOURCE_DIR) + "/configs/integrator_1d.toml";
    const fs::path out = scratch("cli");
    CHECK(run_cli("solve --config " + cfg + " --out " + out.string()) == 0);
    CHECK(fs::exists(out / "value.ravg"));
    CHECK(fs::exists(out / "solve_report.json"));
    CHECK(run_cli("simulate --config " + cfg + " --out " + out.string() + " --seeds 0-2") == 0);
    CHECK(fs::exists(out / "episodes/episode_2.csv"));
    CHECK(run_cli("eval --config " + cfg + " " + out.string()) == 0);
    CHECK(run_cli("export " + out.string() + " --out " + (out / "export").string()) == 0);
    CHECK(fs::exists(out / "export/rewards.csv"));

    const fs::path bad = out / "bad.toml";
    std::ofstream(bad) << "[system]\nname = \"warp_drive\"\n[grid]\nlo=[0]\nhi=[1]\ncount=[3]\n";
    CHECK(run_cli("solve --config " + bad.string() + " --out " + out.string()) == 2);
    CHECK(run_cli("simulate --config " + cfg + " --out " + (out / "nothing").string()) != 0);
    CHECK(run_cli("frobnicate") != 0);
  }
}
