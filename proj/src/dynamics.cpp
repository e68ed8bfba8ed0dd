#include "racbf/dynamics.hpp"

#include "racbf/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace racbf {

bool SystemModel::is_periodic(int dim) const {
  return std::find(periodic_dims.begin(), periodic_dims.end(), dim) != periodic_dims.end();
}

void SystemModel::validate() const {
  RACBF_REQUIRE(state_dim > 0 && state_dim <= kMaxDim, "state_dim out of range");
  RACBF_REQUIRE(control_dim > 0 && control_dim <= kMaxDim, "control_dim out of range");
  RACBF_REQUIRE(disturbance_dim >= 0 && disturbance_dim <= kMaxDim, "disturbance_dim out of range");
  RACBF_REQUIRE(drift && control_jacobian, "model needs drift and control_jacobian");
  RACBF_REQUIRE(disturbance_dim == 0 || disturbance_jacobian, "model needs disturbance_jacobian");
  RACBF_REQUIRE(control_bounds.dim() == control_dim, "control bounds dimension mismatch");
  RACBF_REQUIRE(disturbance_bounds.dim() == disturbance_dim, "disturbance bounds dimension mismatch");
  for (int d : periodic_dims) RACBF_REQUIRE(d >= 0 && d < state_dim, "periodic dim out of range");
}

namespace {

Mat disturbance_matrix(const SystemModel& model, const Vec& x) {
  if (model.disturbance_dim == 0) return Mat(model.state_dim, 0);
  return model.disturbance_jacobian(x);
}

}  // namespace

Vec flow(const SystemModel& model, const Vec& x, const Vec& u, const Vec& d) {
  RACBF_REQUIRE(x.size() == model.state_dim, "flow: state dimension mismatch");
  RACBF_REQUIRE(u.size() == model.control_dim, "flow: control dimension mismatch");
  RACBF_REQUIRE(d.size() == model.disturbance_dim, "flow: disturbance dimension mismatch");
  RACBF_REQUIRE(model.control_bounds.contains(u), "flow: control outside U");
  RACBF_REQUIRE(model.disturbance_bounds.contains(d), "flow: disturbance outside D");
  Vec out = model.drift(x) + model.control_jacobian(x) * u;
  if (model.disturbance_dim > 0) out += model.disturbance_jacobian(x) * d;
  return out;
}

HamiltonianResult hamiltonian(const SystemModel& model, const Vec& x, const Vec& costate) {
  RACBF_REQUIRE(x.size() == model.state_dim, "hamiltonian: state dimension mismatch");
  RACBF_REQUIRE(costate.size() == model.state_dim, "hamiltonian: costate dimension mismatch");
  RACBF_REQUIRE(costate.allFinite(), "hamiltonian: costate must be finite");

  HamiltonianResult r;
  r.u_star.resize(model.control_dim);
  r.d_star.resize(model.disturbance_dim);

  const Vec gl = model.control_jacobian(x).transpose() * costate;
  const double u_term = model.control_bounds.support_max(
      std::span<const double>(gl.data(), gl.size()), std::span<double>(r.u_star.data(), r.u_star.size()));
  double d_term = 0.0;
  if (model.disturbance_dim > 0) {
    const Vec hl = model.disturbance_jacobian(x).transpose() * costate;
    d_term = model.disturbance_bounds.support_min(
        std::span<const double>(hl.data(), hl.size()), std::span<double>(r.d_star.data(), r.d_star.size()));
  }
  r.value = costate.dot(model.drift(x)) + u_term + d_term;
  return r;
}

Vec speed_bound(const SystemModel& model, const Vec& x) {
  const Vec f0 = model.drift(x);
  const Mat g0 = model.control_jacobian(x);
  const Mat h0 = disturbance_matrix(model, x);
  Vec out(model.state_dim);
  std::array<double, kMaxDim> row{};
  for (int i = 0; i < model.state_dim; ++i) {
    for (int j = 0; j < model.control_dim; ++j) row[j] = g0(i, j);
    double s = std::abs(f0[i]) +
               model.control_bounds.max_abs(std::span<const double>(row.data(), model.control_dim));
    for (int j = 0; j < model.disturbance_dim; ++j) row[j] = h0(i, j);
    if (model.disturbance_dim > 0)
      s += model.disturbance_bounds.max_abs(std::span<const double>(row.data(), model.disturbance_dim));
    out[i] = s;
  }
  return out;
}

bool finite_on(const SystemModel& model, const std::vector<Vec>& samples) {
  for (const Vec& x : samples) {
    if (!model.drift(x).allFinite()) return false;
    if (!model.control_jacobian(x).allFinite()) return false;
    if (!disturbance_matrix(model, x).allFinite()) return false;
  }
  return true;
}

SystemModel make_integrator_1d(double u_max) {
  RACBF_REQUIRE(u_max > 0.0, "integrator_1d: u_max must be positive");
  SystemModel m;
  m.name = "integrator_1d";
  m.state_dim = 1;
  m.control_dim = 1;
  m.disturbance_dim = 0;
  m.drift = [](const Vec&) { return Vec::Zero(1); };
  m.control_jacobian = [](const Vec&) { return Mat::Ones(1, 1); };
  m.disturbance_jacobian = [](const Vec&) { return Mat(1, 0); };
  m.control_bounds = BoundSet::box(Vec::Constant(1, -u_max), Vec::Constant(1, u_max));
  m.disturbance_bounds = BoundSet::none();
  m.validate();
  return m;
}

SystemModel make_double_integrator(double u_max, double d_max) {
  RACBF_REQUIRE(u_max > 0.0, "double_integrator: u_max must be positive");
  RACBF_REQUIRE(d_max >= 0.0, "double_integrator: d_max must be >= 0");
  SystemModel m;
  m.name = "double_integrator";
  m.state_dim = 2;
  m.control_dim = 1;
  m.disturbance_dim = 1;
  m.drift = [](const Vec& x) {
    Vec f(2);
    f << x[1], 0.0;
    return f;
  };
  m.control_jacobian = [](const Vec&) {
    Mat g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  m.disturbance_jacobian = [](const Vec&) {
    Mat h(2, 1);
    h << 0.0, 1.0;
    return h;
  };
  m.control_bounds = BoundSet::box(Vec::Constant(1, -u_max), Vec::Constant(1, u_max));
  m.disturbance_bounds = BoundSet::ball(Vec::Zero(1), d_max);
  m.validate();
  return m;
}

SystemModel make_cartpole(const CartpoleParams& p) {
  RACBF_REQUIRE(p.cart_mass > 0.0 && p.pole_mass > 0.0 && p.pole_length > 0.0, "cartpole: masses and length must be positive");
  RACBF_REQUIRE(p.force_max > 0.0 && p.disturbance_max >= 0.0, "cartpole: invalid force bounds");
  SystemModel m;
  m.name = "cartpole";
  m.state_dim = 4;
  m.control_dim = 1;
  m.disturbance_dim = 1;

  m.drift = [p](const Vec& z) {
    const double s = std::sin(z[1]), c = std::cos(z[1]);
    const double td = z[3];
    const double den = p.cart_mass + p.pole_mass * s * s;
    Vec f(4);
    f[0] = z[2];
    f[1] = td;
    f[2] = p.pole_mass * s * (p.pole_length * td * td + p.gravity * c) / den;
    f[3] = (-p.pole_mass * p.pole_length * td * td * s * c - (p.cart_mass + p.pole_mass) * p.gravity * s) /
           (p.pole_length * den);
    return f;
  };
  // Force and disturbance enter through the same column.
  auto force_column = [p](const Vec& z) {
    const double s = std::sin(z[1]), c = std::cos(z[1]);
    const double den = p.cart_mass + p.pole_mass * s * s;
    Mat g(4, 1);
    g << 0.0, 0.0, 1.0 / den, -c / (p.pole_length * den);
    return g;
  };
  m.control_jacobian = force_column;
  m.disturbance_jacobian = force_column;
  m.control_bounds = BoundSet::box(Vec::Constant(1, -p.force_max), Vec::Constant(1, p.force_max));
  m.disturbance_bounds = BoundSet::box(Vec::Constant(1, -p.disturbance_max), Vec::Constant(1, p.disturbance_max));
  m.periodic_dims = {1};
  m.validate();
  return m;
}

CartpoleParams cartpole_params_from(const ModelParams& params) {
  CartpoleParams p;
  for (const auto& [k, v] : params) {
    if (k == "cart_mass") p.cart_mass = v;
    else if (k == "pole_mass") p.pole_mass = v;
    else if (k == "pole_length") p.pole_length = v;
    else if (k == "gravity") p.gravity = v;
    else if (k == "force_max") p.force_max = v;
    else if (k == "disturbance_max") p.disturbance_max = v;
    else throw ConfigError("cartpole: unknown parameter '" + k + "'");
  }
  return p;
}

double cartpole_energy(const CartpoleParams& p, const Vec& z) {
  const double c = std::cos(z[1]);
  const double xd = z[2], td = z[3];
  const double l = p.pole_length;
  return 0.5 * (p.cart_mass + p.pole_mass) * xd * xd + p.pole_mass * l * xd * td * c +
         0.5 * p.pole_mass * l * l * td * td - p.pole_mass * p.gravity * l * c;
}

namespace {

double take(const ModelParams& params, std::set<std::string>& used, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  used.insert(key);
  return it->second;
}

void reject_unused(const std::string& model, const ModelParams& params, const std::set<std::string>& used) {
  for (const auto& [k, v] : params)
    if (!used.count(k)) throw ConfigError(model + ": unknown parameter '" + k + "'");
}

}  // namespace

SystemModel make_model(const std::string& name, const ModelParams& params) {
  if (name == "cartpole") return make_cartpole(cartpole_params_from(params));
  std::set<std::string> used;
  if (name == "integrator_1d") {
    const double u_max = take(params, used, "u_max", 1.0);
    reject_unused(name, params, used);
    return make_integrator_1d(u_max);
  }
  if (name == "double_integrator") {
    const double u_max = take(params, used, "u_max", 1.0);
    const double d_max = take(params, used, "d_max", 0.1);
    reject_unused(name, params, used);
    return make_double_integrator(u_max, d_max);
  }
  throw ConfigError("unknown system '" + name + "'");
}

}  // namespace racbf
