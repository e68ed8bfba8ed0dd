#pragma once

#include "racbf/bounds.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace racbf {

inline constexpr int kMaxDim = 8;

/// Control- and disturbance-affine system
///
///   xdot = f0(x) + g0(x) u + h0(x) d,   u in U, d in D.
///
/// Immutable after construction; every member function is pure.
struct SystemModel {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  int disturbance_dim = 0;

  std::function<Vec(const Vec&)> drift;                 // f0: R^n -> R^n
  std::function<Mat(const Vec&)> control_jacobian;      // g0: R^n -> R^{n x p}
  std::function<Mat(const Vec&)> disturbance_jacobian;  // h0: R^n -> R^{n x q}

  BoundSet control_bounds;
  BoundSet disturbance_bounds;

  /// State dimensions that are angles wrapping to [-pi, pi).
  std::vector<int> periodic_dims;

  bool is_periodic(int dim) const;
  /// Throws ContractViolation if the declared dimensions are inconsistent.
  void validate() const;
};

struct HamiltonianResult {
  double value = 0.0;
  Vec u_star;
  Vec d_star;
};

/// f0(x) + g0(x) u + h0(x) d. `d` may be empty when the model has no disturbance.
Vec flow(const SystemModel& model, const Vec& x, const Vec& u, const Vec& d);

/// H(x, lambda) = max_u min_d lambda' f(x,u,d), in closed form via the support
/// functions of U and D.
HamiltonianResult hamiltonian(const SystemModel& model, const Vec& x, const Vec& costate);

/// Per-dimension speed bound max_{u,d} |f_i(x,u,d)| at one state.
Vec speed_bound(const SystemModel& model, const Vec& x);

/// Evaluates f0, g0, h0 at every sample and reports whether all are finite.
bool finite_on(const SystemModel& model, const std::vector<Vec>& samples);

// --- built-in models --------------------------------------------------------

using ModelParams = std::map<std::string, double>;

SystemModel make_integrator_1d(double u_max = 1.0);

/// pdot = v, vdot = u + d with |u| <= u_max and d in a 1-D ball of radius d_max.
SystemModel make_double_integrator(double u_max = 1.0, double d_max = 0.1);

/// Point-mass cartpole (all pole mass at the tip, no friction), state
/// (x, theta, xdot, thetadot) with theta = 0 hanging down. The cart force and
/// the disturbance force act on the same channel.
struct CartpoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_length = 1.0;
  double gravity = 9.81;
  double force_max = 10.0;
  double disturbance_max = 0.5;
};

SystemModel make_cartpole(const CartpoleParams& params = {});
CartpoleParams cartpole_params_from(const ModelParams& params);

/// Total mechanical energy of the cartpole (potential zero at the pivot height).
double cartpole_energy(const CartpoleParams& params, const Vec& z);

/// Builds a named model ("integrator_1d", "double_integrator", "cartpole").
/// Unknown parameter keys raise ConfigError.
SystemModel make_model(const std::string& name, const ModelParams& params = {});

}  // namespace racbf
