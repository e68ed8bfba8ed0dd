#pragma once

#include "racbf/dynamics.hpp"
#include "racbf/filter.hpp"
#include "racbf/geometry.hpp"
#include "racbf/grid.hpp"
#include "racbf/valuefn.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace racbf {

/// Seeded stream with portable uniform draws (the std distributions are
/// implementation-defined, so they are avoided).
class Rng {
public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform point of a box or ball; `extremes` picks box vertices instead.
  Vec sample(const BoundSet& set, bool extremes = false);

private:
  std::mt19937_64 engine_;
};

enum class DisturbanceMode { Zero, Random, WorstCase };
enum class InitialMode { Explicit, SampledInTube };
enum class RewardKind { None, SwingUp };

std::string to_string(DisturbanceMode mode);
DisturbanceMode disturbance_mode_from(const std::string& name);
std::string to_string(InitialMode mode);
InitialMode initial_mode_from(const std::string& name);
std::string to_string(RewardKind kind);
RewardKind reward_kind_from(const std::string& name);

struct EpisodeSpec {
  double duration = 15.0;
  double control_dt = 0.01;
  int substeps = 4;  // RK4 steps per control step
  DisturbanceMode disturbance = DisturbanceMode::Zero;
  InitialMode initial = InitialMode::SampledInTube;
  Vec initial_state;  // used when initial == Explicit
  bool filter_enabled = true;
  double reward_window = 10.0;
  int max_sampling_tries = 1000000;

  int steps() const;
  void validate() const;
};

/// Everything an episode needs besides the policy and the seed.
struct Environment {
  SystemModel model;
  Grid domain;                              // leaving it ends the episode
  ImplicitSet target;
  ImplicitSet failure;
  std::shared_ptr<const ValueGrid> value;  // required for filtering and in-tube sampling
  FilterConfig filter;
  RewardKind reward = RewardKind::None;
};

/// Per-row status. Filtered steps carry the filter status, unfiltered runs
/// "unfiltered", and the row holding the final state "terminal".
enum class StepStatus { PassThrough, Modified, Fallback, Rejected, Unfiltered, Terminal };
std::string to_string(StepStatus status);
StepStatus step_status_from(const std::string& name);
StepStatus step_status_of(FilterStatus status);

/// Row k holds the state at tau_k and what was applied during [tau_k, tau_k+1).
/// The last row is the final state with zero inputs.
struct EpisodeTrace {
  std::uint64_t seed = 0;
  double control_dt = 0.01;
  double reward_window = 10.0;

  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> nominal;
  std::vector<Vec> applied;
  std::vector<Vec> disturbances;
  std::vector<StepStatus> status;
  std::vector<double> reward;
  std::vector<double> g;  // failure margin per row
  std::vector<double> l;  // target margin per row

  bool entered_failure = false;            // g < 0 on some row
  bool ended_in_target = false;            // l >= 0 on the last row
  bool start_rejected = false;             // filtered run started outside the tube
  std::optional<int> left_tube_step;       // first row with V < 0
  std::optional<int> left_domain_step;     // row at which the state left the grid

  std::size_t rows() const { return times.size(); }
  /// Sum of reward * control_dt over rows with tau < reward_window.
  double window_reward() const;
  /// Recomputes entered_failure / ended_in_target from the stored margins.
  void recompute_flags();
};

/// Nominal policy: (state, episode time tau) -> control.
using Policy = std::function<Vec(const Vec& x, double tau)>;

/// "zero", "random" (params: extremes = bool) or "energy_swingup"
/// (params: k_energy, k_x, k_v). ConfigError for unknown names or keys.
Policy builtin_policy(const std::string& name, const nlohmann::json& params, std::uint64_t seed,
                      const SystemModel& model, const ModelParams& model_params = {});

/// Swing-up reward in [0, 1] for cartpole states (theta = pi upright):
///   (1 + cos(theta - pi))/2 * exp(-x^2) * exp(-0.1 xdot^2) * exp(-0.01 thetadot^2).
double swingup_reward(const Vec& z);
double reward(RewardKind kind, const Vec& x, const Vec& u);

/// Steps one episode under external control; run_episode and the protocol
/// server share it so both produce identical traces for identical inputs.
class EpisodeRunner {
public:
  EpisodeRunner(const Environment& env, const EpisodeSpec& spec, std::uint64_t seed,
                std::optional<Vec> start = std::nullopt);

  bool done() const { return done_; }
  double tau() const { return trace_.times.back(); }
  const Vec& state() const { return trace_.states.back(); }
  int step_index() const { return k_; }

  struct StepOutcome {
    Vec applied;
    StepStatus status;
    double reward = 0.0;
    bool clamped = false;  // u_nom was outside U
  };
  /// Applies one control step. Throws ContractViolation once done().
  StepOutcome step(const Vec& u_nom);

  const EpisodeTrace& trace() const { return trace_; }

private:
  void record_state(const Vec& x, double tau);
  void finish();
  Vec disturbance(const Vec& x, double t);

  const Environment& env_;
  EpisodeSpec spec_;
  Rng dist_rng_;
  EpisodeTrace trace_;
  int k_ = 0;
  int n_steps_ = 0;
  bool done_ = false;
};

/// Start state for a seed: the explicit state, or rejection sampling in the
/// domain for membership at t = -duration.
Vec initial_state(const Environment& env, const EpisodeSpec& spec, std::uint64_t seed);

EpisodeTrace run_episode(const Environment& env, const Policy& policy, const EpisodeSpec& spec, std::uint64_t seed);

/// RK4 over one control step with held u and d; periodic coordinates are wrapped.
Vec integrate(const SystemModel& model, const Vec& x, const Vec& u, const Vec& d, double dt, int substeps);

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  bool unsafe = false;
  bool in_target = false;
  bool start_rejected = false;
  double reward = 0.0;
  Vec delta;  // signed per-dimension distance of the final state to the target box
  Vec final_state;
  int steps = 0;
  int modified = 0;
  int fallback = 0;
  int left_tube_step = -1;
  int left_domain_step = -1;
};

struct Summary {
  std::vector<EpisodeMetrics> episodes;
  double unsafe_pct = 0.0;
  double in_target_pct = 0.0;
  double start_rejected_pct = 0.0;
  double reward_mean = 0.0;
  double reward_std = 0.0;  // population
  Vec delta_mean;
  Vec delta_std;
};

/// Aggregates traces; in_target and delta are measured against `target`.
Summary metrics(const std::vector<EpisodeTrace>& traces, const ImplicitSet& target);

nlohmann::json to_json(const Summary& s);

// Per-episode CSV: tau, x_i..., u_nom_i..., u_i..., status, reward, g, l, d_i...
void write_trace_csv(std::ostream& os, const EpisodeTrace& trace);
EpisodeTrace read_trace_csv(std::istream& is, std::uint64_t seed, double reward_window);

// Summary CSV: one row per episode.
void write_summary_csv(std::ostream& os, const Summary& s);

}  // namespace racbf
