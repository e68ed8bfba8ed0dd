#include "racbf/sim.hpp"

#include "racbf/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace racbf {

// --- Rng ---------------------------------------------------------------------

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

Vec Rng::sample(const BoundSet& set, bool extremes) {
  const int n = set.dim();
  Vec v(n);
  if (set.kind() == BoundSet::Kind::Box) {
    for (int i = 0; i < n; ++i)
      v[i] = extremes ? (uniform() < 0.5 ? set.lo()[i] : set.hi()[i]) : uniform(set.lo()[i], set.hi()[i]);
    return v;
  }
  if (n == 0) return v;
  if (extremes) {
    for (int i = 0; i < n; ++i) v[i] = uniform(-1.0, 1.0);
    const double norm = v.norm();
    return set.center() + (norm > 0.0 ? set.radius() / norm : 0.0) * v;
  }
  do {
    for (int i = 0; i < n; ++i) v[i] = uniform(-1.0, 1.0);
  } while (v.squaredNorm() > 1.0);
  return set.center() + set.radius() * v;
}

// --- names -------------------------------------------------------------------

std::string to_string(DisturbanceMode mode) {
  switch (mode) {
    case DisturbanceMode::Zero: return "zero";
    case DisturbanceMode::Random: return "random";
    case DisturbanceMode::WorstCase: return "worst_case";
  }
  return "unknown";
}

DisturbanceMode disturbance_mode_from(const std::string& name) {
  if (name == "zero") return DisturbanceMode::Zero;
  if (name == "random" || name == "random_in_d" || name == "random-in-d") return DisturbanceMode::Random;
  if (name == "worst_case" || name == "worst-case" || name == "worst_case_feedback") return DisturbanceMode::WorstCase;
  throw ConfigError("unknown disturbance policy '" + name + "'");
}

std::string to_string(InitialMode mode) { return mode == InitialMode::Explicit ? "explicit" : "sampled_in_tube"; }

InitialMode initial_mode_from(const std::string& name) {
  if (name == "explicit") return InitialMode::Explicit;
  if (name == "sampled_in_tube" || name == "sampled-in-tube") return InitialMode::SampledInTube;
  throw ConfigError("unknown initial state mode '" + name + "'");
}

std::string to_string(RewardKind kind) { return kind == RewardKind::SwingUp ? "swingup" : "none"; }

RewardKind reward_kind_from(const std::string& name) {
  if (name == "none") return RewardKind::None;
  if (name == "swingup" || name == "swing_up") return RewardKind::SwingUp;
  throw ConfigError("unknown reward '" + name + "'");
}

std::string to_string(StepStatus status) {
  switch (status) {
    case StepStatus::PassThrough: return "pass_through";
    case StepStatus::Modified: return "modified";
    case StepStatus::Fallback: return "fallback";
    case StepStatus::Rejected: return "rejected";
    case StepStatus::Unfiltered: return "unfiltered";
    case StepStatus::Terminal: return "terminal";
  }
  return "unknown";
}

StepStatus step_status_from(const std::string& name) {
  for (StepStatus s : {StepStatus::PassThrough, StepStatus::Modified, StepStatus::Fallback, StepStatus::Rejected,
                       StepStatus::Unfiltered, StepStatus::Terminal})
    if (to_string(s) == name) return s;
  throw FormatError("unknown step status '" + name + "'", 0);
}

StepStatus step_status_of(FilterStatus status) {
  switch (status) {
    case FilterStatus::PassThrough: return StepStatus::PassThrough;
    case FilterStatus::Modified: return StepStatus::Modified;
    case FilterStatus::Fallback: return StepStatus::Fallback;
    case FilterStatus::Rejected: return StepStatus::Rejected;
  }
  return StepStatus::Rejected;
}

// --- spec --------------------------------------------------------------------

int EpisodeSpec::steps() const { return static_cast<int>(std::llround(duration / control_dt)); }

void EpisodeSpec::validate() const {
  RACBF_REQUIRE(duration > 0.0 && control_dt > 0.0, "episode: duration and control_dt must be > 0");
  RACBF_REQUIRE(std::abs(steps() * control_dt - duration) <= 1e-9, "episode: control_dt must divide duration");
  RACBF_REQUIRE(substeps >= 1, "episode: substeps must be >= 1");
  RACBF_REQUIRE(reward_window >= 0.0 && reward_window <= duration + 1e-9, "episode: reward_window must be <= duration");
  RACBF_REQUIRE(max_sampling_tries >= 1, "episode: max_sampling_tries must be >= 1");
}

// --- trace -------------------------------------------------------------------

double EpisodeTrace::window_reward() const {
  double r = 0.0;
  for (std::size_t k = 0; k < rows(); ++k)
    if (times[k] < reward_window - 1e-9 && status[k] != StepStatus::Terminal) r += reward[k] * control_dt;
  return r;
}

void EpisodeTrace::recompute_flags() {
  entered_failure = std::any_of(g.begin(), g.end(), [](double v) { return v < 0.0; });
  ended_in_target = !l.empty() && l.back() >= 0.0;
}

// --- policies ----------------------------------------------------------------

namespace {

void reject_unknown(const nlohmann::json& params, std::initializer_list<const char*> known, const std::string& name) {
  if (params.is_null()) return;
  if (!params.is_object()) throw ConfigError("policy '" + name + "': parameters must be a table");
  for (auto it = params.begin(); it != params.end(); ++it)
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
      throw ConfigError("policy '" + name + "': unknown parameter '" + it.key() + "'");
}

template <typename T>
T param(const nlohmann::json& params, const char* key, T fallback) {
  if (params.is_object() && params.contains(key)) return params.at(key).get<T>();
  return fallback;
}

double sign_nonneg(double v) { return v >= 0.0 ? 1.0 : -1.0; }

}  // namespace

Policy builtin_policy(const std::string& name, const nlohmann::json& params, std::uint64_t seed,
                      const SystemModel& model, const ModelParams& model_params) {
  const BoundSet U = model.control_bounds;
  if (name == "zero") {
    reject_unknown(params, {}, name);
    const int p = model.control_dim;
    return [p](const Vec&, double) { return Vec::Zero(p).eval(); };
  }
  if (name == "random") {
    reject_unknown(params, {"extremes"}, name);
    const bool extremes = param(params, "extremes", false);
    auto rng = std::make_shared<Rng>(seed, 2);
    return [U, extremes, rng](const Vec&, double) { return rng->sample(U, extremes); };
  }
  if (name == "energy_swingup" || name == "energy-swingup") {
    reject_unknown(params, {"k_energy", "k_x", "k_v"}, name);
    if (model.name != "cartpole") throw ConfigError("energy_swingup needs the cartpole model");
    const CartpoleParams cp = cartpole_params_from(model_params);
    const double ke = param(params, "k_energy", 20.0);
    const double kx = param(params, "k_x", 1.0);
    const double kv = param(params, "k_v", 1.0);
    return [U, cp, ke, kx, kv](const Vec& z, double) {
      // pendulum energy relative to the pivot; upright is m g l
      const double m = cp.pole_mass, l = cp.pole_length;
      const double e = 0.5 * m * l * l * z[3] * z[3] - m * cp.gravity * l * std::cos(z[1]);
      const double e_up = m * cp.gravity * l;
      Vec u(1);
      u[0] = ke * (e - e_up) * sign_nonneg(z[3] * std::cos(z[1])) - kx * z[0] - kv * z[2];
      return U.clamp(u);
    };
  }
  throw ConfigError("unknown policy '" + name + "'");
}

double swingup_reward(const Vec& z) {
  RACBF_REQUIRE(z.size() == 4, "swingup_reward: expects a cartpole state");
  const double upright = 0.5 * (1.0 + std::cos(z[1] - std::numbers::pi));
  return upright * std::exp(-z[0] * z[0]) * std::exp(-0.1 * z[2] * z[2]) * std::exp(-0.01 * z[3] * z[3]);
}

double reward(RewardKind kind, const Vec& x, const Vec&) {
  return kind == RewardKind::SwingUp ? swingup_reward(x) : 0.0;
}

// --- integration -------------------------------------------------------------

Vec integrate(const SystemModel& model, const Vec& x, const Vec& u, const Vec& d, double dt, int substeps) {
  const double h = dt / substeps;
  Vec z = x;
  for (int s = 0; s < substeps; ++s) {
    const Vec k1 = flow(model, z, u, d);
    const Vec k2 = flow(model, z + 0.5 * h * k1, u, d);
    const Vec k3 = flow(model, z + 0.5 * h * k2, u, d);
    const Vec k4 = flow(model, z + h * k3, u, d);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  for (int i : model.periodic_dims) z[i] = wrap_periodic(z[i], -std::numbers::pi, std::numbers::pi);
  return z;
}

// --- episodes ----------------------------------------------------------------

namespace {

// Lower-corner nodes of cells with at least one corner in the tube. The value
// inside a cell is a convex combination of its corners, so no other cell can
// hold a member.
std::vector<std::size_t> tube_cells(const Grid& grid, const std::vector<double>& values) {
  std::vector<char> mark(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) mark[k] = values[k] >= 0.0;
  std::vector<int> idx(grid.ndim());
  for (int i = 0; i < grid.ndim(); ++i) {
    const GridDim& d = grid.dim(i);
    const std::size_t st = grid.stride(i);
    const std::vector<char> prev = mark;
    for (std::size_t k = 0; k < mark.size(); ++k) {
      const int j = static_cast<int>((k / st) % static_cast<std::size_t>(d.count));
      if (j + 1 < d.count) mark[k] |= prev[k + st];
      else if (d.periodic) mark[k] |= prev[k - static_cast<std::size_t>(d.count - 1) * st];
    }
  }
  std::vector<std::size_t> cells;
  for (std::size_t k = 0; k < mark.size(); ++k) {
    if (!mark[k]) continue;
    grid.multi_index(k, idx);
    bool lower = true;
    for (int i = 0; i < grid.ndim(); ++i) lower = lower && (grid.dim(i).periodic || idx[i] + 1 < grid.dim(i).count);
    if (lower) cells.push_back(k);
  }
  return cells;
}

}  // namespace

Vec initial_state(const Environment& env, const EpisodeSpec& spec, std::uint64_t seed) {
  if (spec.initial == InitialMode::Explicit) {
    RACBF_REQUIRE(spec.initial_state.size() == env.model.state_dim, "episode: explicit start has wrong dimension");
    return spec.initial_state;
  }
  RACBF_REQUIRE(env.value != nullptr, "episode: in-tube sampling needs a value function");
  const Grid& grid = env.value->grid;
  const std::vector<std::size_t> cells = tube_cells(grid, slice_at(*env.value, -spec.duration));
  // uniform cell among the candidates, uniform point inside it, accept members:
  // uniform over the tube since all cells have the same volume
  Rng rng(seed, 0);
  Vec x(grid.ndim());
  std::vector<int> idx(grid.ndim());
  for (int tries = 0; tries < spec.max_sampling_tries && !cells.empty(); ++tries) {
    const auto pick = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(cells.size())),
                               cells.size() - 1);
    grid.multi_index(cells[pick], idx);
    for (int i = 0; i < grid.ndim(); ++i) {
      const GridDim& d = grid.dim(i);
      x[i] = d.coordinate(idx[i]) + d.spacing() * rng.uniform();
      if (d.periodic) x[i] = wrap_periodic(x[i], d.lo, d.hi);
    }
    if (env.domain.contains(x) && membership(*env.value, x, -spec.duration)) return x;
  }
  throw std::runtime_error("episode: no in-tube start found in " + std::to_string(spec.max_sampling_tries) + " tries");
}

EpisodeRunner::EpisodeRunner(const Environment& env, const EpisodeSpec& spec, std::uint64_t seed,
                             std::optional<Vec> start)
    : env_(env), spec_(spec), dist_rng_(seed, 1) {
  spec_.validate();
  if (spec_.filter_enabled) {
    RACBF_REQUIRE(env_.value != nullptr, "episode: filtering needs a value function");
    env_.filter.validate();
  }
  n_steps_ = spec_.steps();
  trace_.seed = seed;
  trace_.control_dt = spec_.control_dt;
  trace_.reward_window = spec_.reward_window;
  const Vec x0 = start ? *start : initial_state(env_, spec_, seed);
  RACBF_REQUIRE(x0.size() == env_.model.state_dim, "episode: start state has wrong dimension");
  record_state(x0, 0.0);

  if (!env_.domain.contains(x0)) {
    trace_.left_domain_step = 0;
    finish();
    return;
  }
  if (spec_.filter_enabled && !membership(*env_.value, x0, -spec_.duration)) {
    trace_.start_rejected = true;
    trace_.status.back() = StepStatus::Rejected;
    done_ = true;
    trace_.recompute_flags();
    return;
  }
  if (n_steps_ == 0) finish();
}

void EpisodeRunner::record_state(const Vec& x, double tau) {
  const int p = env_.model.control_dim, q = env_.model.disturbance_dim;
  trace_.times.push_back(tau);
  trace_.states.push_back(x);
  trace_.nominal.push_back(Vec::Zero(p));
  trace_.applied.push_back(Vec::Zero(p));
  trace_.disturbances.push_back(Vec::Zero(q));
  trace_.status.push_back(StepStatus::Terminal);
  trace_.reward.push_back(reward(env_.reward, x, Vec::Zero(p)));
  trace_.g.push_back(failure_margin(env_.failure, x));
  trace_.l.push_back(target_margin(env_.target, x));
  if (env_.value && !trace_.left_tube_step) {
    const double t = tau - spec_.duration;
    if (!env_.value->grid.contains(x) || value_at(*env_.value, x, std::min(t, 0.0)) < 0.0)
      trace_.left_tube_step = static_cast<int>(trace_.times.size()) - 1;
  }
}

void EpisodeRunner::finish() {
  done_ = true;
  trace_.recompute_flags();
}

Vec EpisodeRunner::disturbance(const Vec& x, double t) {
  const BoundSet& D = env_.model.disturbance_bounds;
  switch (spec_.disturbance) {
    case DisturbanceMode::Zero:
      if (D.kind() == BoundSet::Kind::Ball) return D.center();
      return D.clamp(Vec::Zero(D.dim()));
    case DisturbanceMode::Random: return dist_rng_.sample(D);
    case DisturbanceMode::WorstCase: {
      RACBF_REQUIRE(env_.value != nullptr, "episode: worst-case disturbance needs a value function");
      const Vec xc = env_.value->grid.clamp(x);
      return hamiltonian(env_.model, xc, spatial_gradient(*env_.value, xc, t)).d_star;
    }
  }
  return Vec::Zero(D.dim());
}

EpisodeRunner::StepOutcome EpisodeRunner::step(const Vec& u_nom) {
  RACBF_REQUIRE(!done_, "episode: step after done");
  RACBF_REQUIRE(u_nom.size() == env_.model.control_dim, "episode: control has wrong dimension");
  const std::size_t row = trace_.rows() - 1;
  const Vec x = trace_.states[row];
  const double tau = trace_.times[row];
  const double t = std::min(tau - spec_.duration, 0.0);

  StepOutcome out;
  const Vec u_clamped = env_.model.control_bounds.clamp(u_nom);
  out.clamped = !(u_clamped.array() == u_nom.array()).all();
  if (spec_.filter_enabled) {
    const FilterResult fr = filter_control(*env_.value, env_.model, x, t, u_clamped, env_.filter);
    out.applied = fr.u;
    out.status = step_status_of(fr.status);
  } else {
    out.applied = u_clamped;
    out.status = StepStatus::Unfiltered;
  }
  const Vec d = disturbance(x, t);
  out.reward = reward(env_.reward, x, out.applied);

  trace_.nominal[row] = u_nom;
  trace_.applied[row] = out.applied;
  trace_.disturbances[row] = d;
  trace_.status[row] = out.status;
  trace_.reward[row] = out.reward;

  ++k_;
  const Vec next = integrate(env_.model, x, out.applied, d, spec_.control_dt, spec_.substeps);
  record_state(next, k_ * spec_.control_dt);
  if (!next.allFinite() || !env_.domain.contains(next)) {
    trace_.left_domain_step = k_;
    finish();
  } else if (k_ >= n_steps_) {
    finish();
  }
  return out;
}

EpisodeTrace run_episode(const Environment& env, const Policy& policy, const EpisodeSpec& spec, std::uint64_t seed) {
  EpisodeRunner runner(env, spec, seed);
  while (!runner.done()) runner.step(policy(runner.state(), runner.tau()));
  return runner.trace();
}

// --- metrics -----------------------------------------------------------------

Summary metrics(const std::vector<EpisodeTrace>& traces, const ImplicitSet& target) {
  RACBF_REQUIRE(!traces.empty(), "metrics: no traces");
  Summary s;
  const auto box = target.box_intervals();
  const auto periods = target.box_periods();
  for (const EpisodeTrace& tr : traces) {
    RACBF_REQUIRE(tr.rows() > 0, "metrics: empty trace");
    EpisodeMetrics m;
    m.seed = tr.seed;
    m.unsafe = std::any_of(tr.g.begin(), tr.g.end(), [](double v) { return v < 0.0; });
    m.final_state = tr.states.back();
    m.in_target = target.margin(m.final_state) >= 0.0;
    m.start_rejected = tr.start_rejected;
    m.reward = tr.window_reward();
    m.delta = box ? target_offsets(*box, periods, m.final_state) : Vec::Zero(m.final_state.size());
    m.steps = static_cast<int>(tr.rows()) - 1;
    for (StepStatus st : tr.status) {
      m.modified += st == StepStatus::Modified;
      m.fallback += st == StepStatus::Fallback;
    }
    m.left_tube_step = tr.left_tube_step.value_or(-1);
    m.left_domain_step = tr.left_domain_step.value_or(-1);
    s.episodes.push_back(std::move(m));
  }
  const double n = static_cast<double>(s.episodes.size());
  const int dim = static_cast<int>(s.episodes.front().delta.size());
  s.delta_mean = Vec::Zero(dim);
  s.delta_std = Vec::Zero(dim);
  for (const auto& m : s.episodes) {
    s.unsafe_pct += m.unsafe;
    s.in_target_pct += m.in_target;
    s.start_rejected_pct += m.start_rejected;
    s.reward_mean += m.reward;
    s.delta_mean += m.delta;
  }
  s.unsafe_pct *= 100.0 / n;
  s.in_target_pct *= 100.0 / n;
  s.start_rejected_pct *= 100.0 / n;
  s.reward_mean /= n;
  s.delta_mean /= n;
  for (const auto& m : s.episodes) {
    s.reward_std += (m.reward - s.reward_mean) * (m.reward - s.reward_mean);
    s.delta_std += (m.delta - s.delta_mean).cwiseAbs2();
  }
  s.reward_std = std::sqrt(s.reward_std / n);
  s.delta_std = (s.delta_std / n).cwiseSqrt();
  return s;
}

namespace {

std::vector<double> to_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_vec(std::ostream& os, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << fmt(v[i]);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int count_prefix(const std::vector<std::string>& header, const std::string& prefix) {
  int n = 0;
  while (std::find(header.begin(), header.end(), prefix + std::to_string(n)) != header.end()) ++n;
  return n;
}

}  // namespace

nlohmann::json to_json(const Summary& s) {
  nlohmann::json j;
  j["episodes"] = s.episodes.size();
  j["unsafe_pct"] = s.unsafe_pct;
  j["in_target_pct"] = s.in_target_pct;
  j["start_rejected_pct"] = s.start_rejected_pct;
  j["reward_mean"] = s.reward_mean;
  j["reward_std"] = s.reward_std;
  j["delta_mean"] = to_vector(s.delta_mean);
  j["delta_std"] = to_vector(s.delta_std);
  return j;
}

void write_trace_csv(std::ostream& os, const EpisodeTrace& tr) {
  RACBF_REQUIRE(tr.rows() > 0, "write_trace_csv: empty trace");
  const auto n = tr.states[0].size(), p = tr.applied[0].size(), q = tr.disturbances[0].size();
  os << "tau";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_" << i;
  for (Eigen::Index i = 0; i < p; ++i) os << ",u_nom_" << i;
  for (Eigen::Index i = 0; i < p; ++i) os << ",u_" << i;
  os << ",status,reward,g,l";
  for (Eigen::Index i = 0; i < q; ++i) os << ",d_" << i;
  os << '\n';
  for (std::size_t k = 0; k < tr.rows(); ++k) {
    os << fmt(tr.times[k]);
    put_vec(os, tr.states[k]);
    put_vec(os, tr.nominal[k]);
    put_vec(os, tr.applied[k]);
    os << ',' << to_string(tr.status[k]) << ',' << fmt(tr.reward[k]) << ',' << fmt(tr.g[k]) << ',' << fmt(tr.l[k]);
    put_vec(os, tr.disturbances[k]);
    os << '\n';
  }
}

EpisodeTrace read_trace_csv(std::istream& is, std::uint64_t seed, double reward_window) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("trace CSV: missing header", 0);
  const std::vector<std::string> header = split(line);
  const int n = count_prefix(header, "x_"), p = count_prefix(header, "u_"), q = count_prefix(header, "d_");
  const std::size_t width = 1 + n + 2 * p + 4 + q;
  if (n == 0 || header.size() != width || header[0] != "tau")
    throw FormatError("trace CSV: unexpected header '" + line + "'", 0);

  EpisodeTrace tr;
  tr.seed = seed;
  tr.reward_window = reward_window;
  std::size_t offset = line.size() + 1;
  auto read_vec = [](const std::vector<std::string>& c, std::size_t from, int len) {
    Vec v(len);
    for (int i = 0; i < len; ++i) v[i] = std::stod(c[from + i]);
    return v;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> c = split(line);
    if (c.size() != width) throw FormatError("trace CSV: row has " + std::to_string(c.size()) + " cells", offset);
    try {
      std::size_t at = 0;
      tr.times.push_back(std::stod(c[at++]));
      tr.states.push_back(read_vec(c, at, n)), at += n;
      tr.nominal.push_back(read_vec(c, at, p)), at += p;
      tr.applied.push_back(read_vec(c, at, p)), at += p;
      tr.status.push_back(step_status_from(c[at++]));
      tr.reward.push_back(std::stod(c[at++]));
      tr.g.push_back(std::stod(c[at++]));
      tr.l.push_back(std::stod(c[at++]));
      tr.disturbances.push_back(read_vec(c, at, q));
    } catch (const std::logic_error&) {
      throw FormatError("trace CSV: bad number in row", offset);
    }
    offset += line.size() + 1;
  }
  if (tr.rows() == 0) throw FormatError("trace CSV: no rows", offset);
  tr.control_dt = tr.rows() > 1 ? tr.times[1] - tr.times[0] : 0.0;
  tr.start_rejected = tr.status.front() == StepStatus::Rejected;
  tr.recompute_flags();
  return tr;
}

void write_summary_csv(std::ostream& os, const Summary& s) {
  const auto n = s.episodes.empty() ? 0 : s.episodes.front().delta.size();
  os << "seed,unsafe,in_target,start_rejected,reward,steps,modified,fallback,left_tube_step,left_domain_step";
  for (Eigen::Index i = 0; i < n; ++i) os << ",delta_" << i;
  for (Eigen::Index i = 0; i < n; ++i) os << ",final_" << i;
  os << '\n';
  for (const auto& m : s.episodes) {
    os << m.seed << ',' << int(m.unsafe) << ',' << int(m.in_target) << ',' << int(m.start_rejected) << ','
       << fmt(m.reward) << ',' << m.steps << ',' << m.modified << ',' << m.fallback << ',' << m.left_tube_step << ','
       << m.left_domain_step;
    put_vec(os, m.delta);
    put_vec(os, m.final_state);
    os << '\n';
  }
}

}  // namespace racbf
