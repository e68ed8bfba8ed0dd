#pragma once

#include "racbf/dynamics.hpp"
#include "racbf/geometry.hpp"
#include "racbf/grid.hpp"
#include "racbf/valuefn.hpp"

#include <span>
#include <string>
#include <vector>

namespace racbf {

enum class SolveMode { FixedTime, Tube, AvoidOnly };

std::string to_string(SolveMode mode);
SolveMode solve_mode_from(const std::string& name);

struct SolveSpec {
  SolveMode mode = SolveMode::Tube;
  double horizon = 1.0;           // seconds, > 0
  double cfl_safety = 0.5;        // (0, 1]
  double convergence_tol = 1e-4;  // tube / avoid-only early stop, max-norm between stored slices
  int snapshot_stride = 1;        // store every k-th step

  void validate() const;
};

/// V(x, 0): min(l, g) for fixed-time and tube, g for avoid-only.
std::vector<double> terminal_slice(const Grid& grid, const ImplicitSet& target, const ImplicitSet& failure,
                                   SolveMode mode);

/// Lax-Friedrichs numerical Hamiltonian at one state:
///   H((grad+ + grad-)/2, x) + sum_i alpha_i (grad+_i - grad-_i)/2
/// with alpha_i = max over U x D of |f_i|. The dissipation enters with a plus
/// sign because the value is stepped backward as V + dt * H_hat.
double numerical_hamiltonian(const SystemModel& model, const Vec& x, const Vec& left_grads, const Vec& right_grads);

/// Backward stepping machinery bound to one model, grid and pair of sets.
///
/// The affine terms f0, g0, h0 and the dissipation coefficients are sampled
/// once per node. Each step maps every node independently from the input
/// slice to the output slice, so results do not depend on the worker count.
class BackwardStepper {
public:
  BackwardStepper(const SystemModel& model, const Grid& grid, const ImplicitSet& target,
                  const ImplicitSet& failure, SolveMode mode);

  const Grid& grid() const { return grid_; }
  SolveMode mode() const { return mode_; }
  const std::vector<double>& target_values() const { return l_; }
  const std::vector<double>& failure_values() const { return g_; }

  /// Per-dimension speed bound over all nodes.
  const Vec& max_speed() const { return max_speed_; }
  /// Largest stable step: 1 / sum_i(max_speed_i / dx_i); +inf for zero dynamics.
  double cfl_limit() const;
  /// cfl_safety * cfl_limit(); `horizon` when the dynamics vanish everywhere.
  double cfl_dt(double cfl_safety, double horizon) const;

  std::vector<double> terminal() const;

  /// out = clamp(in + dt * H_hat(in)). Refuses dt above the CFL limit.
  /// On a non-periodic face the missing neighbour is a ghost value: the linear
  /// extrapolation, capped at the face value, so nothing outside the grid can
  /// raise the value.
  void step(std::span<const double> in, double dt, std::span<double> out) const;

  /// H_hat of `slice` at one node, plus the magnitudes used for residual tolerances.
  struct NodeHamiltonian {
    double value;        // numerical Hamiltonian
    double central;      // H at the averaged gradient
    double dissipation;  // sum_i alpha_i |grad+_i - grad-_i| / 2
    double rate;         // sum_i alpha_i / dx_i
  };
  NodeHamiltonian hamiltonian_at(std::span<const double> slice, std::size_t node) const;

  /// True when the node is not on a non-periodic boundary face.
  bool interior(std::size_t node) const;

private:
  double node_hamiltonian(std::span<const double> slice, std::size_t node, const int* idx,
                          NodeHamiltonian* detail) const;

  BoundSet U_, D_;
  Grid grid_;
  SolveMode mode_;
  int n_, p_, q_;
  std::vector<double> f0_, g0_, h0_, alpha_;  // per node: n, n*p, n*q, n
  std::vector<double> l_, g_;
  Vec max_speed_;
  std::vector<double> inv_dx_;
};

/// CFL step for the model on the grid (see BackwardStepper::cfl_dt).
double cfl_dt(const SystemModel& model, const Grid& grid, double cfl_safety = 0.5, double horizon = 1.0);

/// One backward step of size dt from `slice` (convenience; builds a stepper).
std::vector<double> step_backward(const std::vector<double>& slice, double dt, const SystemModel& model,
                                  const Grid& grid, const ImplicitSet& target, const ImplicitSet& failure,
                                  SolveMode mode);

/// Integrates the variational inequality backward from t = 0 to -horizon.
///
/// Steps are horizon / ceil(horizon / dt_cfl); if not even one CFL step fits
/// in the horizon only the terminal slice is returned. Tube and avoid-only
/// solves stop once two successive stored slices differ by less than
/// convergence_tol and mark the result converged. Throws InstabilityError
/// naming the first non-finite node.
ValueGrid solve(const SystemModel& model, const Grid& grid, const ImplicitSet& target, const ImplicitSet& failure,
                const SolveSpec& spec, nlohmann::json provenance = nlohmann::json::object());

/// Discrete checks of the variational inequality and the barrier decrease
/// condition on the stored slices.
struct ResidualReport {
  std::size_t vi_checked = 0;
  std::size_t vi_passed = 0;
  std::size_t cbf_checked = 0;
  std::size_t cbf_passed = 0;
  double worst_vi = 0.0;   // most negative (residual + tol)
  double worst_cbf = 0.0;

  double vi_fraction() const { return vi_checked ? double(vi_passed) / double(vi_checked) : 1.0; }
  double cbf_fraction() const { return cbf_checked ? double(cbf_passed) / double(cbf_checked) : 1.0; }
};

/// For every stored time t_j < 0 and every interior node with V(x, t_j) >= 0.
/// dV/dt is the difference quotient to the next later slice t_{j-1}, H_hat is
/// evaluated on that later slice (the explicit scheme's direction), and
/// tol_r = 10 * (t_{j-1} - t_j) * rate * dissipation.
///  - VI: where the derivative branch is active (g - V > tol_c, and also
///    V - l > tol_c in tube mode) dV/dt + H_hat >= -tol_r; elsewhere V <= g.
///  - Barrier decrease: dV/dt + H_hat >= -gamma * V - tol_r.
ResidualReport check_residuals(const SystemModel& model, const ValueGrid& vg, const ImplicitSet& target,
                               const ImplicitSet& failure, SolveMode mode, double gamma = 1.0, double tol_c = 1e-9);

}  // namespace racbf
