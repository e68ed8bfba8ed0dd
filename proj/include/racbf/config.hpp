#pragma once

#include "racbf/dynamics.hpp"
#include "racbf/filter.hpp"
#include "racbf/geometry.hpp"
#include "racbf/grid.hpp"
#include "racbf/hjsolver.hpp"
#include "racbf/sim.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace racbf {

/// Parses the TOML subset used by run configs (grammar in README):
/// comments, [table] and [a.b] headers, key = value with numbers, "strings",
/// booleans and (nested) arrays. Numbers may be written with pi and inf,
/// optionally scaled: -pi, pi/8, 2*pi, -inf. Throws ConfigError naming the line.
nlohmann::json parse_toml(const std::string& text);
nlohmann::json load_toml(const std::string& path);

/// "3", "0-99" (inclusive) or "1,5,9"; ranges and lists may be combined.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

struct RunConfig {
  nlohmann::json raw;  // parsed file, for provenance

  std::string system;
  ModelParams model_params;
  std::vector<GridDim> grid_dims;
  std::string set_preset;  // empty when sets are explicit
  ImplicitSet target;
  ImplicitSet failure;
  SolveSpec solve;
  FilterConfig filter;
  EpisodeSpec episode;
  RewardKind reward = RewardKind::None;
  std::string policy = "zero";
  nlohmann::json policy_params = nlohmann::json::object();
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds = {0};

  SystemModel model() const { return make_model(system, model_params); }
  Grid grid() const { return Grid(grid_dims); }
  Environment environment(std::shared_ptr<const ValueGrid> value) const;

  /// FNV-1a 64 over the canonical JSON of the system, grid, sets and solve
  /// tables; identifies which value function a config expects.
  std::string spec_hash() const;
};

RunConfig run_config_from(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

std::string fnv1a64_hex(const std::string& bytes);

}  // namespace racbf
