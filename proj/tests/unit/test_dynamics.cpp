#include "oracles/brute_hamiltonian.hpp"
#include "oracles/cartpole_lagrange.hpp"
#include "racbf/dynamics.hpp"
#include "racbf/error.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace racbf;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// Random affine model with 3 states, 2 box controls and 1 box disturbance.
SystemModel random_affine(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Mat A(3, 3), B(3, 2), C(3, 1);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) A(i, j) = U(rng);
    for (int j = 0; j < 2; ++j) B(i, j) = U(rng);
    C(i, 0) = U(rng);
  }
  SystemModel m;
  m.name = "affine";
  m.state_dim = 3;
  m.control_dim = 2;
  m.disturbance_dim = 1;
  m.drift = [A](const Vec& x) { return Vec(A * x); };
  m.control_jacobian = [B](const Vec&) { return B; };
  m.disturbance_jacobian = [C](const Vec&) { return C; };
  m.control_bounds = BoundSet::box(v2(-1.0, -0.5), v2(0.7, 2.0));
  m.disturbance_bounds = BoundSet::box(v1(-0.3), v1(0.2));
  m.validate();
  return m;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("box support function picks vertices and breaks ties toward lo") {
    const BoundSet b = BoundSet::box(v2(-1.0, -2.0), v2(3.0, 4.0));
    Vec arg(2);
    CHECK(b.support_max(std::vector<double>{1.0, -1.0}, std::span<double>(arg.data(), 2)) == doctest::Approx(5.0));
    CHECK(arg[0] == 3.0);
    CHECK(arg[1] == -2.0);
    b.support_max(std::vector<double>{0.0, 0.0}, std::span<double>(arg.data(), 2));
    CHECK(arg[0] == -1.0);
    CHECK(arg[1] == -2.0);
    CHECK(b.support_min(v2(1.0, 1.0)) == doctest::Approx(-3.0));
  }

  TEST_CASE("ball support function and center tie-break") {
    const BoundSet b = BoundSet::ball(v2(1.0, 0.0), 2.0);
    Vec arg(2);
    CHECK(b.support_min(std::vector<double>{3.0, 4.0}, std::span<double>(arg.data(), 2)) ==
          doctest::Approx(3.0 - 10.0));
    CHECK(arg[0] == doctest::Approx(1.0 - 1.2));
    CHECK(arg[1] == doctest::Approx(-1.6));
    b.support_min(std::vector<double>{0.0, 0.0}, std::span<double>(arg.data(), 2));
    CHECK(arg[0] == 1.0);
    CHECK(arg[1] == 0.0);
  }

  TEST_CASE("bound sets reject malformed boxes") {
    CHECK_THROWS_AS(BoundSet::box(v1(1.0), v1(0.0)), ContractViolation);
    CHECK_THROWS_AS(BoundSet::box(v1(0.0), v1(std::numeric_limits<double>::infinity())), ContractViolation);
    CHECK_THROWS_AS(BoundSet::ball(v1(0.0), -1.0), ContractViolation);
  }

  TEST_CASE("flow of the double integrator") {
    const SystemModel m = make_double_integrator(1.0, 0.0);
    const Vec f = flow(m, v2(1.0, 2.0), v1(0.5), v1(0.0));
    CHECK(f[0] == 2.0);
    CHECK(f[1] == 0.5);
  }

  TEST_CASE("flow with zero inputs is the drift") {
    const SystemModel m = make_cartpole();
    const Vec z = (Vec(4) << 0.3, 1.1, -0.4, 2.0).finished();
    const Vec f = flow(m, z, v1(0.0), v1(0.0));
    CHECK((f - m.drift(z)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("flow contract checks") {
    const SystemModel m = make_double_integrator(1.0, 0.1);
    CHECK_THROWS_AS(flow(m, v1(0.0), v1(0.0), v1(0.0)), ContractViolation);
    CHECK_THROWS_AS(flow(m, v2(0, 0), v1(1.5), v1(0.0)), ContractViolation);
    CHECK_THROWS_AS(flow(m, v2(0, 0), v1(0.0), v1(0.2)), ContractViolation);
  }

  TEST_CASE("cartpole equilibria") {
    const SystemModel m = make_cartpole();
    const Vec down = Vec::Zero(4);
    CHECK(flow(m, down, v1(0.0), v1(0.0)).cwiseAbs().maxCoeff() == 0.0);
    const Vec up = (Vec(4) << 0.0, std::numbers::pi, 0.0, 0.0).finished();
    CHECK(flow(m, up, v1(0.0), v1(0.0)).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("cartpole accelerations match the Euler-Lagrange equations") {
    const CartpoleParams p;
    const SystemModel m = make_cartpole(p);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> th(-std::numbers::pi, std::numbers::pi), w(-7, 7), F(-10, 10), D(-0.5, 0.5);
    for (int i = 0; i < 200; ++i) {
      const Vec z = (Vec(4) << 0.5, th(rng), 1.0, w(rng)).finished();
      const double u = F(rng), d = D(rng);
      const Vec f = flow(m, z, v1(u), v1(d));
      const auto acc = oracle::cartpole_accel(p.cart_mass, p.pole_mass, p.pole_length, p.gravity, z[1], z[3], u + d);
      CHECK(f[0] == z[2]);
      CHECK(f[1] == z[3]);
      CHECK(f[2] == doctest::Approx(acc[0]).epsilon(1e-12));
      CHECK(f[3] == doctest::Approx(acc[1]).epsilon(1e-12));
    }
  }

  TEST_CASE("hamiltonian: zero costate") {
    const SystemModel m = make_cartpole();
    const auto h = hamiltonian(m, (Vec(4) << 0.1, 0.2, 0.3, 0.4).finished(), Vec::Zero(4));
    CHECK(h.value == 0.0);
    CHECK(m.control_bounds.contains(h.u_star));
    CHECK(m.disturbance_bounds.contains(h.d_star));
  }

  TEST_CASE("hamiltonian: double integrator bang control") {
    const SystemModel m = make_double_integrator(1.0, 0.0);
    const auto h = hamiltonian(m, v2(0.0, 0.0), v2(0.0, 1.0));
    CHECK(h.value == doctest::Approx(1.0));
    CHECK(h.u_star[0] == 1.0);
  }

  TEST_CASE("hamiltonian: ball disturbance term is -r |lambda_v|") {
    const SystemModel m = make_double_integrator(1.0, 0.1);
    const auto h = hamiltonian(m, v2(0.5, 0.0), v2(0.0, -2.0));
    CHECK(h.value == doctest::Approx(2.0 - 0.2));
    CHECK(h.u_star[0] == -1.0);
    CHECK(h.d_star[0] == doctest::Approx(0.1));
  }

  TEST_CASE("hamiltonian matches the brute-force max-min on random affine models") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      const SystemModel m = random_affine(rng);
      for (int s = 0; s < 4; ++s) {
        const Vec x = (Vec(3) << U(rng), U(rng), U(rng)).finished();
        const Vec lam = (Vec(3) << U(rng), U(rng), U(rng)).finished();
        const auto h = hamiltonian(m, x, lam);
        CHECK(std::abs(h.value - oracle::brute_hamiltonian(m, x, lam, 101)) <= 1e-3);
        // the returned pair attains the value
        CHECK(lam.dot(flow(m, x, h.u_star, h.d_star)) == doctest::Approx(h.value).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("speed bound matches brute force") {
    const SystemModel m = make_cartpole();
    const Vec z = (Vec(4) << 0.0, 0.7, 1.0, -3.0).finished();
    const Vec s = speed_bound(m, z), b = oracle::brute_speed(m, z, 2);
    for (int i = 0; i < 4; ++i) CHECK(s[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }

  TEST_CASE("built-in models are finite on their domains") {
    std::vector<Vec> samples;
    for (double x : {-1.8, 0.0, 1.8})
      for (double th = -std::numbers::pi; th < std::numbers::pi; th += 0.3)
        for (double w : {-7.0, 0.0, 7.0}) samples.push_back((Vec(4) << x, th, 3.0, w).finished());
    CHECK(finite_on(make_cartpole(), samples));
  }

  TEST_CASE("cartpole energy at the equilibria") {
    const CartpoleParams p;
    CHECK(cartpole_energy(p, Vec::Zero(4)) == doctest::Approx(-p.pole_mass * p.gravity * p.pole_length));
    const Vec up = (Vec(4) << 0.0, std::numbers::pi, 0.0, 0.0).finished();
    CHECK(cartpole_energy(p, up) == doctest::Approx(p.pole_mass * p.gravity * p.pole_length));
  }

  TEST_CASE("make_model validates names and parameters") {
    CHECK(make_model("integrator_1d").state_dim == 1);
    CHECK(make_model("double_integrator", {{"d_max", 0.2}}).disturbance_bounds.radius() == 0.2);
    CHECK(make_model("cartpole", {{"force_max", 5.0}}).control_bounds.hi()[0] == 5.0);
    CHECK_THROWS_AS(make_model("pendulum"), ConfigError);
    CHECK_THROWS_AS(make_model("cartpole", {{"mass", 1.0}}), ConfigError);
    CHECK_THROWS_AS(make_model("integrator_1d", {{"d_max", 1.0}}), ConfigError);
  }
}
