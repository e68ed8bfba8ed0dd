#include "racbf/commands.hpp"

#include "racbf/error.hpp"
#include "racbf/hjsolver.hpp"
#include "racbf/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace racbf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

json config_key(const RunConfig& cfg) {
  json key = json::object();
  for (const char* k : {"system", "grid", "sets", "solve"})
    if (cfg.raw.contains(k)) key[k] = cfg.raw.at(k);
  return key;
}

bool needs_value(const RunConfig& cfg) {
  return cfg.episode.filter_enabled || cfg.episode.initial == InitialMode::SampledInTube ||
         cfg.episode.disturbance == DisturbanceMode::WorstCase;
}

// Target widened by one grid cell per dimension, when the target is box-shaped.
std::optional<ImplicitSet> inflated_target(const RunConfig& cfg) {
  const Grid grid = cfg.grid();
  Vec pad(grid.ndim());
  for (int i = 0; i < grid.ndim(); ++i) pad[i] = grid.dim(i).spacing();
  try {
    return cfg.target.inflated(pad);
  } catch (const ContractViolation&) {
    return std::nullopt;
  }
}

json summarize(const RunConfig& cfg, const std::vector<EpisodeTrace>& traces, const fs::path& out) {
  const Summary s = metrics(traces, cfg.target);
  json j = to_json(s);
  if (auto wide = inflated_target(cfg)) j["in_target_inflated_pct"] = metrics(traces, *wide).in_target_pct;
  std::ostringstream csv;
  write_summary_csv(csv, s);
  write_text(out / "summary.csv", csv.str());
  write_text(out / "summary.json", j.dump(2) + "\n");
  return j;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
};

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  if (!std::getline(in, line)) throw FormatError("empty CSV '" + path.string() + "'", 0);
  t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json cmd_solve(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  const fs::path out(out_dir);
  fs::create_directories(out);
  const SystemModel model = cfg.model();
  const Grid grid = cfg.grid();

  json prov = json::object();
  prov["spec_hash"] = cfg.spec_hash();
  prov["config"] = config_key(cfg);
  log << "solving " << cfg.system << " on " << grid.size() << " nodes, mode " << to_string(cfg.solve.mode)
      << ", horizon " << cfg.solve.horizon << '\n';

  const auto t0 = std::chrono::steady_clock::now();
  const ValueGrid vg = solve(model, grid, cfg.target, cfg.failure, cfg.solve, prov);
  const double solve_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const fs::path artifact = out / "value.ravg";
  save(vg, artifact.string());

  const auto t1 = std::chrono::steady_clock::now();
  const ResidualReport res = check_residuals(model, vg, cfg.target, cfg.failure, cfg.solve.mode, cfg.filter.gamma);
  const double check_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();

  json report;
  report["artifact"] = artifact.string();
  report["spec_hash"] = cfg.spec_hash();
  report["nodes"] = grid.size();
  report["steps"] = vg.provenance.at("steps");
  report["dt"] = vg.provenance.at("dt");
  report["stored_slices"] = vg.times.size();
  report["converged"] = vg.converged;
  report["reached_time"] = vg.times.back();
  report["wall_time_s"] = solve_s;
  report["residual_check_s"] = check_s;
  report["max_vi_residual"] = -res.worst_vi;
  report["max_cbf_residual"] = -res.worst_cbf;
  report["vi_pass_fraction"] = res.vi_fraction();
  report["cbf_pass_fraction"] = res.cbf_fraction();
  report["vi_checked"] = res.vi_checked;
  report["cbf_checked"] = res.cbf_checked;
  write_text(out / "solve_report.json", report.dump(2) + "\n");
  log << "wrote " << artifact.string() << " (" << vg.provenance.at("steps") << " steps, " << solve_s << " s)\n";
  return report;
}

std::shared_ptr<const ValueGrid> load_value_for(const RunConfig& cfg, const std::string& path, bool force) {
  auto vg = std::make_shared<ValueGrid>(load(path));
  const std::string want = cfg.spec_hash();
  const std::string have = vg->provenance.value("spec_hash", std::string());
  if (have != want && !force)
    throw ConfigError("value function '" + path + "' was solved for spec " + (have.empty() ? "<unknown>" : have) +
                      ", config expects " + want + " (use --force to override)");
  if (!(vg->grid == cfg.grid()) && !force) throw ConfigError("value function grid differs from the config grid");
  return vg;
}

json cmd_simulate(const RunConfig& cfg, const std::string& value_path, const std::string& out_dir,
                  const std::vector<std::uint64_t>& seeds, bool force, std::ostream& log) {
  RACBF_REQUIRE(!seeds.empty(), "simulate: no seeds");
  std::shared_ptr<const ValueGrid> vg;
  if (!value_path.empty()) vg = load_value_for(cfg, value_path, force);
  else if (needs_value(cfg)) throw ConfigError("simulate: this config needs a value function (--value)");

  const Environment env = cfg.environment(vg);
  const fs::path out(out_dir);
  fs::create_directories(out / "episodes");

  std::vector<EpisodeTrace> traces(seeds.size());
  std::vector<std::string> errors(seeds.size());
  const long n = static_cast<long>(seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      const Policy policy = builtin_policy(cfg.policy, cfg.policy_params, seeds[i], env.model, cfg.model_params);
      traces[i] = run_episode(env, policy, cfg.episode, seeds[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (!errors[i].empty()) throw std::runtime_error("episode seed " + std::to_string(seeds[i]) + ": " + errors[i]);

  for (const EpisodeTrace& tr : traces) {
    std::ostringstream csv;
    write_trace_csv(csv, tr);
    write_text(out / "episodes" / ("episode_" + std::to_string(tr.seed) + ".csv"), csv.str());
  }
  json j = summarize(cfg, traces, out);
  log << "simulated " << seeds.size() << " episodes: unsafe_pct " << j.at("unsafe_pct").get<double>()
      << ", in_target_pct " << j.at("in_target_pct").get<double>() << '\n';
  return j;
}

void cmd_serve(const RunConfig& cfg, const std::string& value_path, const std::string& transport, bool force,
               std::istream& in, std::ostream& out, std::ostream& log) {
  std::shared_ptr<const ValueGrid> vg;
  if (!value_path.empty()) vg = load_value_for(cfg, value_path, force);
  else if (needs_value(cfg)) throw ConfigError("serve: this config needs a value function (--value)");

  if (transport == "stdio") {
    ProtocolSession session(cfg, vg);
    serve_stream(session, in, out);
    return;
  }
  if (transport.rfind("tcp:", 0) == 0) {
    int port = 0;
    try {
      port = std::stoi(transport.substr(4));
    } catch (const std::exception&) {
      throw ConfigError("bad transport '" + transport + "'");
    }
    if (port < 0 || port > 65535) throw ConfigError("bad port in '" + transport + "'");
    serve_tcp([&] { return std::make_unique<ProtocolSession>(cfg, vg); }, port, 0,
              [&](int p) { log << "listening on 127.0.0.1:" << p << std::endl; });
    return;
  }
  throw ConfigError("unknown transport '" + transport + "' (stdio or tcp:PORT)");
}

json cmd_eval(const RunConfig& cfg, const std::string& run_dir, const std::string& out_dir, std::ostream& log) {
  const fs::path dir = fs::path(run_dir) / "episodes";
  if (!fs::is_directory(dir)) throw std::runtime_error("no episodes directory in '" + run_dir + "'");
  std::vector<std::pair<std::uint64_t, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("episode_", 0) != 0 || entry.path().extension() != ".csv") continue;
    files.emplace_back(std::stoull(name.substr(8, name.size() - 12)), entry.path());
  }
  if (files.empty()) throw std::runtime_error("no episode CSVs in '" + dir.string() + "'");
  std::sort(files.begin(), files.end());
  std::vector<EpisodeTrace> traces;
  for (const auto& [seed, path] : files) {
    std::ifstream in(path);
    traces.push_back(read_trace_csv(in, seed, cfg.episode.reward_window));
  }
  const fs::path out(out_dir);
  fs::create_directories(out);
  json j = summarize(cfg, traces, out);
  log << "evaluated " << traces.size() << " episodes\n";
  return j;
}

json cmd_export(const std::vector<std::string>& inputs, const std::string& out_dir, std::ostream& log) {
  if (inputs.empty()) throw ConfigError("export: no inputs");
  struct Run {
    std::vector<double> reward, unsafe;
    std::vector<std::vector<double>> delta;
  };
  std::vector<Run> runs;
  std::size_t ndelta = 0;
  for (const std::string& input : inputs) {
    fs::path path(input);
    if (fs::is_directory(path)) path /= "summary.csv";
    const Table t = read_csv(path);
    int rc = t.column("reward");
    if (rc < 0) rc = t.column("reward_10s");
    const int uc = t.column("unsafe");
    if (rc < 0 || uc < 0) throw FormatError("'" + path.string() + "' lacks reward or unsafe columns", 0);
    std::vector<int> dc;
    for (int i = 0; t.column("delta_" + std::to_string(i)) >= 0; ++i) dc.push_back(t.column("delta_" + std::to_string(i)));
    if (runs.empty()) ndelta = dc.size();
    if (dc.size() != ndelta) throw FormatError("'" + path.string() + "' has a different number of delta columns", 0);
    Run r;
    for (const auto& row : t.rows) {
      if (row.size() != t.header.size()) throw FormatError("ragged row in '" + path.string() + "'", 0);
      r.reward.push_back(std::stod(row[rc]));
      r.unsafe.push_back(std::stod(row[uc]));
      std::vector<double> d;
      for (int c : dc) d.push_back(std::stod(row[c]));
      r.delta.push_back(std::move(d));
    }
    runs.push_back(std::move(r));
  }

  std::size_t episodes = 0;
  for (const Run& r : runs) episodes = std::max(episodes, r.reward.size());
  auto mean_std = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    return std::pair{m, std::sqrt(s / static_cast<double>(v.size()))};
  };

  std::ostringstream rewards, deltas, unsafe;
  rewards << "episode,runs,reward_mean,reward_std\n";
  unsafe << "episode,runs,unsafe_pct\n";
  deltas << "episode,runs";
  for (std::size_t i = 0; i < ndelta; ++i) deltas << ",delta_" << i << "_mean,delta_" << i << "_std";
  deltas << '\n';
  double unsafe_total = 0.0, count_total = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    std::vector<double> rw, us;
    std::vector<std::vector<double>> ds(ndelta);
    for (const Run& r : runs) {
      if (e >= r.reward.size()) continue;
      rw.push_back(r.reward[e]);
      us.push_back(r.unsafe[e]);
      for (std::size_t i = 0; i < ndelta; ++i) ds[i].push_back(r.delta[e][i]);
    }
    const auto [rm, rs] = mean_std(rw);
    const auto [um, us_] = mean_std(us);
    (void)us_;
    unsafe_total += um * static_cast<double>(us.size());
    count_total += static_cast<double>(us.size());
    rewards << e << ',' << rw.size() << ',' << num(rm) << ',' << num(rs) << '\n';
    unsafe << e << ',' << us.size() << ',' << num(100.0 * um) << '\n';
    deltas << e << ',' << rw.size();
    for (std::size_t i = 0; i < ndelta; ++i) {
      const auto [dm, dsd] = mean_std(ds[i]);
      deltas << ',' << num(dm) << ',' << num(dsd);
    }
    deltas << '\n';
  }
  const fs::path out(out_dir);
  fs::create_directories(out);
  write_text(out / "rewards.csv", rewards.str());
  write_text(out / "deltas.csv", deltas.str());
  write_text(out / "unsafe.csv", unsafe.str());
  json j;
  j["runs"] = runs.size();
  j["episodes"] = episodes;
  j["unsafe_pct"] = count_total > 0 ? 100.0 * unsafe_total / count_total : 0.0;
  write_text(out / "export.json", j.dump(2) + "\n");
  log << "exported " << runs.size() << " runs, " << episodes << " episodes\n";
  return j;
}

}  // namespace racbf
