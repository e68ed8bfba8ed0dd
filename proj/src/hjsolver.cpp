#include "racbf/hjsolver.hpp"

#include "racbf/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace racbf {

std::string to_string(SolveMode mode) {
  switch (mode) {
    case SolveMode::FixedTime: return "fixed_time";
    case SolveMode::Tube: return "tube";
    case SolveMode::AvoidOnly: return "avoid_only";
  }
  return "unknown";
}

SolveMode solve_mode_from(const std::string& name) {
  if (name == "fixed_time" || name == "fixed-time") return SolveMode::FixedTime;
  if (name == "tube") return SolveMode::Tube;
  if (name == "avoid_only" || name == "avoid-only") return SolveMode::AvoidOnly;
  throw ConfigError("unknown solve mode '" + name + "'");
}

void SolveSpec::validate() const {
  RACBF_REQUIRE(std::isfinite(horizon) && horizon > 0.0, "solve: horizon must be > 0");
  RACBF_REQUIRE(cfl_safety > 0.0 && cfl_safety <= 1.0, "solve: cfl_safety must be in (0, 1]");
  RACBF_REQUIRE(convergence_tol >= 0.0, "solve: convergence_tol must be >= 0");
  RACBF_REQUIRE(snapshot_stride >= 1, "solve: snapshot_stride must be >= 1");
}

std::vector<double> terminal_slice(const Grid& grid, const ImplicitSet& target, const ImplicitSet& failure,
                                   SolveMode mode) {
  RACBF_REQUIRE(target.dim() == grid.ndim() && failure.dim() == grid.ndim(), "terminal_slice: set dimension mismatch");
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec x = grid.node(k);
    const double g = failure_margin(failure, x);
    v[k] = mode == SolveMode::AvoidOnly ? g : std::min(target_margin(target, x), g);
  }
  return v;
}

namespace {

// Closed-form Hamiltonian on raw per-node terms.
double affine_hamiltonian(int n, int p, int q, const double* f0, const double* g0, const double* h0,
                          const double* lambda, const BoundSet& U, const BoundSet& D) {
  std::array<double, kMaxDim> w{};
  double h = 0.0;
  for (int i = 0; i < n; ++i) h += lambda[i] * f0[i];
  for (int j = 0; j < p; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += g0[i * p + j] * lambda[i];
    w[j] = s;
  }
  h += U.support_max(std::span<const double>(w.data(), p));
  if (q > 0) {
    for (int j = 0; j < q; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += h0[i * q + j] * lambda[i];
      w[j] = s;
    }
    h += D.support_min(std::span<const double>(w.data(), q));
  }
  return h;
}

void sample_terms(const SystemModel& model, const Vec& x, double* f0, double* g0, double* h0, double* alpha) {
  const int n = model.state_dim, p = model.control_dim, q = model.disturbance_dim;
  const Vec f = model.drift(x);
  const Mat g = model.control_jacobian(x);
  RACBF_REQUIRE(f.size() == n && g.rows() == n && g.cols() == p, "model returned terms of the wrong shape");
  for (int i = 0; i < n; ++i) {
    f0[i] = f[i];
    for (int j = 0; j < p; ++j) g0[i * p + j] = g(i, j);
  }
  if (q > 0) {
    const Mat h = model.disturbance_jacobian(x);
    RACBF_REQUIRE(h.rows() == n && h.cols() == q, "model returned terms of the wrong shape");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < q; ++j) h0[i * q + j] = h(i, j);
  }
  const Vec s = speed_bound(model, x);
  for (int i = 0; i < n; ++i) alpha[i] = s[i];
}

}  // namespace

double numerical_hamiltonian(const SystemModel& model, const Vec& x, const Vec& left_grads, const Vec& right_grads) {
  const int n = model.state_dim, p = model.control_dim, q = model.disturbance_dim;
  RACBF_REQUIRE(x.size() == n && left_grads.size() == n && right_grads.size() == n,
                "numerical_hamiltonian: dimension mismatch");
  std::array<double, kMaxDim> f0{}, alpha{}, avg{};
  std::array<double, kMaxDim * kMaxDim> g0{}, h0{};
  sample_terms(model, x, f0.data(), g0.data(), h0.data(), alpha.data());
  double diss = 0.0;
  for (int i = 0; i < n; ++i) {
    avg[i] = 0.5 * (right_grads[i] + left_grads[i]);
    diss += alpha[i] * 0.5 * (right_grads[i] - left_grads[i]);
  }
  return affine_hamiltonian(n, p, q, f0.data(), g0.data(), h0.data(), avg.data(), model.control_bounds,
                            model.disturbance_bounds) +
         diss;
}

BackwardStepper::BackwardStepper(const SystemModel& model, const Grid& grid, const ImplicitSet& target,
                                 const ImplicitSet& failure, SolveMode mode)
    : U_(model.control_bounds),
      D_(model.disturbance_bounds),
      grid_(grid),
      mode_(mode),
      n_(model.state_dim),
      p_(model.control_dim),
      q_(model.disturbance_dim) {
  model.validate();
  RACBF_REQUIRE(grid.ndim() == n_, "grid dimension does not match the model state dimension");
  for (int i = 0; i < n_; ++i)
    RACBF_REQUIRE(grid.dim(i).periodic == model.is_periodic(i), "grid periodic flags must match the model");
  const std::size_t N = grid.size();
  f0_.resize(N * n_);
  g0_.resize(N * n_ * p_);
  h0_.resize(N * n_ * q_);
  alpha_.resize(N * n_);
  l_.resize(N);
  g_.resize(N);
  max_speed_ = Vec::Zero(n_);
  std::array<double, kMaxDim * kMaxDim> hbuf{};
  for (std::size_t k = 0; k < N; ++k) {
    const Vec x = grid.node(k);
    sample_terms(model, x, &f0_[k * n_], &g0_[k * n_ * p_], q_ > 0 ? &h0_[k * n_ * q_] : hbuf.data(),
                 &alpha_[k * n_]);
    for (int i = 0; i < n_; ++i) {
      const double a = alpha_[k * n_ + i];
      if (!std::isfinite(a)) {
        std::ostringstream os;
        os << "model terms are not finite at grid node " << k;
        throw ContractViolation(os.str());
      }
      max_speed_[i] = std::max(max_speed_[i], a);
    }
    l_[k] = target_margin(target, x);
    g_[k] = failure_margin(failure, x);
  }
  inv_dx_.resize(n_);
  for (int i = 0; i < n_; ++i) inv_dx_[i] = 1.0 / grid.dim(i).spacing();
}

double BackwardStepper::cfl_limit() const {
  double rate = 0.0;
  for (int i = 0; i < n_; ++i) rate += max_speed_[i] * inv_dx_[i];
  return rate > 0.0 ? 1.0 / rate : kInf;
}

double BackwardStepper::cfl_dt(double cfl_safety, double horizon) const {
  const double lim = cfl_limit();
  if (!std::isfinite(lim)) return horizon;
  return cfl_safety * lim;
}

std::vector<double> BackwardStepper::terminal() const {
  std::vector<double> v(grid_.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = mode_ == SolveMode::AvoidOnly ? g_[k] : std::min(l_[k], g_[k]);
  return v;
}

bool BackwardStepper::interior(std::size_t node) const {
  for (int i = 0; i < n_; ++i) {
    const GridDim& d = grid_.dim(i);
    if (d.periodic) continue;
    const int j = static_cast<int>((node / grid_.stride(i)) % static_cast<std::size_t>(d.count));
    if (j == 0 || j == d.count - 1) return false;
  }
  return true;
}

double BackwardStepper::node_hamiltonian(std::span<const double> slice, std::size_t node, const int* idx,
                                         NodeHamiltonian* detail) const {
  std::array<double, kMaxDim> avg{};
  const double v = slice[node];
  double diss = 0.0, diss_abs = 0.0, rate = 0.0;
  const double* alpha = &alpha_[node * n_];
  for (int i = 0; i < n_; ++i) {
    const GridDim& d = grid_.dim(i);
    const std::size_t st = grid_.stride(i);
    const int j = idx[i];
    double dm, dp;
    if (d.periodic) {
      const std::size_t l = j > 0 ? node - st : node + static_cast<std::size_t>(d.count - 1) * st;
      const std::size_t r = j < d.count - 1 ? node + st : node - static_cast<std::size_t>(d.count - 1) * st;
      dm = (v - slice[l]) * inv_dx_[i];
      dp = (slice[r] - v) * inv_dx_[i];
    } else if (j == 0) {
      // ghost node: linear extrapolation, never above the edge value
      dp = (slice[node + st] - v) * inv_dx_[i];
      dm = std::max(dp, 0.0);
    } else if (j == d.count - 1) {
      dm = (v - slice[node - st]) * inv_dx_[i];
      dp = std::min(dm, 0.0);
    } else {
      dm = (v - slice[node - st]) * inv_dx_[i];
      dp = (slice[node + st] - v) * inv_dx_[i];
    }
    avg[i] = 0.5 * (dp + dm);
    diss += alpha[i] * 0.5 * (dp - dm);
    if (detail) {
      diss_abs += alpha[i] * 0.5 * std::abs(dp - dm);
      rate += alpha[i] * inv_dx_[i];
    }
  }
  const double h = affine_hamiltonian(n_, p_, q_, &f0_[node * n_], &g0_[node * n_ * p_],
                                      q_ > 0 ? &h0_[node * n_ * q_] : nullptr, avg.data(), U_, D_);
  if (detail) *detail = {h + diss, h, diss_abs, rate};
  return h + diss;
}

BackwardStepper::NodeHamiltonian BackwardStepper::hamiltonian_at(std::span<const double> slice,
                                                                 std::size_t node) const {
  RACBF_REQUIRE(slice.size() == grid_.size(), "hamiltonian_at: slice size mismatch");
  std::array<int, kMaxDim> idx{};
  grid_.multi_index(node, std::span<int>(idx.data(), n_));
  NodeHamiltonian out{};
  node_hamiltonian(slice, node, idx.data(), &out);
  return out;
}

void BackwardStepper::step(std::span<const double> in, double dt, std::span<double> out) const {
  RACBF_REQUIRE(in.size() == grid_.size() && out.size() == grid_.size(), "step: slice size mismatch");
  RACBF_REQUIRE(dt > 0.0, "step: dt must be positive");
  if (dt > cfl_limit() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "step: dt " << dt << " exceeds the CFL limit " << cfl_limit();
    throw ContractViolation(os.str());
  }
  const int last = n_ - 1;
  const int row_len = grid_.dim(last).count;
  const auto rows = static_cast<std::ptrdiff_t>(grid_.size() / static_cast<std::size_t>(row_len));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t row = 0; row < rows; ++row) {
    std::array<int, kMaxDim> idx{};
    const std::size_t base = static_cast<std::size_t>(row) * static_cast<std::size_t>(row_len);
    std::size_t rem = base;
    for (int i = 0; i < last; ++i) {
      idx[i] = static_cast<int>(rem / grid_.stride(i));
      rem %= grid_.stride(i);
    }
    for (int j = 0; j < row_len; ++j) {
      idx[last] = j;
      const std::size_t node = base + static_cast<std::size_t>(j);
      const double w = in[node] + dt * node_hamiltonian(in, node, idx.data(), nullptr);
      switch (mode_) {
        case SolveMode::FixedTime:
        case SolveMode::AvoidOnly: out[node] = std::min(w, g_[node]); break;
        case SolveMode::Tube: out[node] = std::min(std::max(w, l_[node]), g_[node]); break;
      }
    }
  }
}

double cfl_dt(const SystemModel& model, const Grid& grid, double cfl_safety, double horizon) {
  const ImplicitSet none = ImplicitSet::empty(grid.ndim());
  return BackwardStepper(model, grid, none, none, SolveMode::FixedTime).cfl_dt(cfl_safety, horizon);
}

std::vector<double> step_backward(const std::vector<double>& slice, double dt, const SystemModel& model,
                                  const Grid& grid, const ImplicitSet& target, const ImplicitSet& failure,
                                  SolveMode mode) {
  BackwardStepper stepper(model, grid, target, failure, mode);
  std::vector<double> out(slice.size());
  stepper.step(slice, dt, out);
  return out;
}

namespace {

void require_finite(const Grid& grid, const std::vector<double>& v, double t) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (std::isfinite(v[k])) continue;
    std::vector<int> idx(grid.ndim());
    grid.multi_index(k, idx);
    std::ostringstream os;
    os << "non-finite value " << v[k] << " at node [";
    for (int i = 0; i < grid.ndim(); ++i) os << (i ? "," : "") << idx[i];
    os << "] at t = " << t;
    throw InstabilityError(os.str());
  }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

ValueGrid solve(const SystemModel& model, const Grid& grid, const ImplicitSet& target, const ImplicitSet& failure,
                const SolveSpec& spec, nlohmann::json provenance) {
  spec.validate();
  const BackwardStepper stepper(model, grid, target, failure, spec.mode);

  ValueGrid vg;
  vg.grid = grid;
  vg.provenance = std::move(provenance);
  std::vector<double> cur = stepper.terminal();
  require_finite(grid, cur, 0.0);
  vg.times.push_back(0.0);
  vg.slices.push_back(cur);

  const double dt_cfl = stepper.cfl_dt(spec.cfl_safety, spec.horizon);
  std::size_t steps = 0;
  double dt = 0.0;
  if (spec.horizon >= dt_cfl * (1.0 - 1e-12)) {
    steps = static_cast<std::size_t>(std::ceil(spec.horizon / dt_cfl - 1e-9));
    dt = spec.horizon / static_cast<double>(steps);
  }

  std::vector<double> next(cur.size());
  std::size_t taken = 0;
  const bool can_converge = spec.mode != SolveMode::FixedTime;
  for (std::size_t k = 1; k <= steps; ++k) {
    stepper.step(cur, dt, next);
    const double t = -static_cast<double>(k) * spec.horizon / static_cast<double>(steps);
    require_finite(grid, next, t);
    cur.swap(next);
    taken = k;
    if (k % static_cast<std::size_t>(spec.snapshot_stride) == 0 || k == steps) {
      const bool conv = can_converge && max_abs_diff(cur, vg.slices.back()) < spec.convergence_tol;
      vg.times.push_back(t);
      vg.slices.push_back(cur);
      if (conv) {
        vg.converged = true;
        break;
      }
    }
  }

  vg.provenance["mode"] = to_string(spec.mode);
  vg.provenance["dt"] = dt;
  vg.provenance["steps"] = taken;
  vg.provenance["horizon"] = spec.horizon;
  vg.provenance["cfl_safety"] = spec.cfl_safety;
  vg.provenance["snapshot_stride"] = spec.snapshot_stride;
  return vg;
}

ResidualReport check_residuals(const SystemModel& model, const ValueGrid& vg, const ImplicitSet& target,
                               const ImplicitSet& failure, SolveMode mode, double gamma, double tol_c) {
  const BackwardStepper stepper(model, vg.grid, target, failure, mode);
  const auto& l = stepper.target_values();
  const auto& g = stepper.failure_values();
  ResidualReport rep;
  for (std::size_t j = 1; j < vg.times.size(); ++j) {
    const double span = vg.times[j - 1] - vg.times[j];
    const auto& later = vg.slices[j - 1];
    const auto& now = vg.slices[j];
    for (std::size_t k = 0; k < vg.grid.size(); ++k) {
      const double v = now[k];
      if (v < 0.0 || !stepper.interior(k)) continue;
      const auto h = stepper.hamiltonian_at(later, k);
      const double resid = (later[k] - v) / span + h.value;
      // tol_c floors the tolerance against roundoff where the stencil is smooth
      const double tol_r = 10.0 * span * h.rate * h.dissipation + tol_c;

      bool active = g[k] - v > tol_c;
      if (mode == SolveMode::Tube) active = active && v - l[k] > tol_c;
      ++rep.vi_checked;
      if (active) {
        const double slack = resid + tol_r;
        if (slack >= 0.0) ++rep.vi_passed;
        rep.worst_vi = std::min(rep.worst_vi, slack);
      } else if (v <= g[k]) {
        ++rep.vi_passed;
      }

      ++rep.cbf_checked;
      const double cbf_slack = resid + gamma * v + tol_r;
      if (cbf_slack >= 0.0) ++rep.cbf_passed;
      rep.worst_cbf = std::min(rep.worst_cbf, cbf_slack);
    }
  }
  return rep;
}

}  // namespace racbf
