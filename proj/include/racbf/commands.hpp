#pragma once

#include "racbf/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace racbf {

/// Solves the configured game and writes <out>/value.ravg plus
/// <out>/solve_report.json. Returns the report (which holds the artifact path).
nlohmann::json cmd_solve(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

/// Loads a value function and checks its spec hash against the config unless `force`.
std::shared_ptr<const ValueGrid> load_value_for(const RunConfig& cfg, const std::string& path, bool force);

/// Runs one episode per seed and writes <out>/episodes/episode_<seed>.csv,
/// <out>/summary.csv and <out>/summary.json. `value_path` may be empty when
/// the config neither filters nor samples starts in the tube.
nlohmann::json cmd_simulate(const RunConfig& cfg, const std::string& value_path, const std::string& out_dir,
                            const std::vector<std::uint64_t>& seeds, bool force, std::ostream& log);

/// Speaks the episode protocol over "stdio" (using in/out) or "tcp:PORT".
void cmd_serve(const RunConfig& cfg, const std::string& value_path, const std::string& transport, bool force,
               std::istream& in, std::ostream& out, std::ostream& log);

/// Recomputes the summary from <run_dir>/episodes/*.csv into <out>.
nlohmann::json cmd_eval(const RunConfig& cfg, const std::string& run_dir, const std::string& out_dir,
                        std::ostream& log);

/// Merges per-episode tables (summary.csv files, run directories holding one,
/// or learning-curve CSVs with reward/reward_10s, unsafe and delta_* columns)
/// into <out>/rewards.csv, <out>/deltas.csv and <out>/unsafe.csv, indexed by
/// episode with mean and standard deviation across the inputs.
nlohmann::json cmd_export(const std::vector<std::string>& inputs, const std::string& out_dir, std::ostream& log);

}  // namespace racbf
