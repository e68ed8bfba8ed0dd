#include "oracles/cfl_sampler.hpp"
#include "racbf/error.hpp"
#include "racbf/hjsolver.hpp"

#include <doctest.h>

#include <cmath>

using namespace racbf;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

const Grid& line_grid() {
  static const Grid g({{-2.0, 2.0, 201, false}});
  return g;
}

ValueGrid solve_line(SolveMode mode, double horizon = 1.0, int stride = 1) {
  const SetPreset sets = set_preset("integrator_1d");
  SolveSpec spec;
  spec.mode = mode;
  spec.horizon = horizon;
  spec.convergence_tol = 0.0;
  spec.snapshot_stride = stride;
  return solve(make_integrator_1d(), line_grid(), sets.target, sets.failure, spec);
}

// Positive-side zero crossing of a 1-D slice by linear interpolation.
double crossing(const Grid& g, const std::vector<double>& s) {
  const int mid = g.dim(0).count / 2;
  for (int j = mid; j + 1 < g.dim(0).count; ++j)
    if (s[j] >= 0.0 && s[j + 1] < 0.0) {
      const double x0 = g.dim(0).coordinate(j);
      return x0 + g.dim(0).spacing() * s[j] / (s[j] - s[j + 1]);
    }
  return NAN;
}

}  // namespace

TEST_SUITE("hjsolver") {
  TEST_CASE("1-D integrator: the zero level set grows at unit speed") {
    const ValueGrid vg = solve_line(SolveMode::Tube);
    const double dx = line_grid().dim(0).spacing();
    for (double t : {0.25, 0.5, 1.0}) {
      std::vector<double> s(line_grid().size());
      for (std::size_t k = 0; k < s.size(); ++k) s[k] = value_at(vg, line_grid().node(k), -t);
      CHECK(std::abs(crossing(line_grid(), s) - (0.3 + t)) <= 1.5 * dx);
    }
  }

  TEST_CASE("refining the grid moves the crossing toward the exact front") {
    const SetPreset sets = set_preset("integrator_1d");
    SolveSpec spec;
    spec.horizon = 1.0;
    spec.convergence_tol = 0.0;
    double last = INFINITY;
    for (int count : {26, 51, 101, 201}) {
      const Grid g({{-2.0, 2.0, count, false}});
      const ValueGrid vg = solve(make_integrator_1d(), g, sets.target, sets.failure, spec);
      std::vector<double> s(g.size());
      for (std::size_t k = 0; k < s.size(); ++k) s[k] = value_at(vg, g.node(k), -1.0);
      const double err = std::abs(crossing(g, s) - 1.3);
      CHECK(err <= last + 1e-12);
      last = err;
    }
    CHECK(last <= line_grid().dim(0).spacing());
  }

  TEST_CASE("tube value is non-decreasing in backward time and dominates the target margin") {
    const ValueGrid vg = solve_line(SolveMode::Tube, 0.5);
    const SetPreset sets = set_preset("integrator_1d");
    for (std::size_t j = 1; j < vg.times.size(); ++j)
      for (std::size_t k = 0; k < line_grid().size(); ++k) {
        CHECK(vg.slices[j][k] >= vg.slices[j - 1][k] - 1e-12);
        CHECK(vg.slices[j][k] >= target_margin(sets.target, line_grid().node(k)));
      }
  }

  TEST_CASE("fixed-time and tube agree when the target can be held") {
    const ValueGrid a = solve_line(SolveMode::FixedTime);
    const ValueGrid b = solve_line(SolveMode::Tube);
    REQUIRE(a.times == b.times);
    const double dx = line_grid().dim(0).spacing();
    for (std::size_t j = 0; j < a.times.size(); ++j)
      CHECK(std::abs(crossing(line_grid(), a.slices[j]) - crossing(line_grid(), b.slices[j])) <= dx);
  }

  TEST_CASE("CFL step examples and the sampled oracle") {
    CHECK(cfl_dt(make_integrator_1d(), line_grid(), 0.5) == doctest::Approx(0.01));
    CHECK(cfl_dt(make_integrator_1d(2.0), line_grid(), 1.0) == doctest::Approx(0.01));
    const Grid g2({{-2, 2, 41, false}, {-1, 1, 21, false}});
    // speeds: |v| <= 1, |u + d| <= 1.1 -> rate = 1/0.1 + 1.1/0.1 = 21
    CHECK(cfl_dt(make_double_integrator(1.0, 0.1), g2, 0.5) == doctest::Approx(0.5 / 21.0));
    CHECK(cfl_dt(make_double_integrator(1.0, 0.1), g2, 0.5) ==
          doctest::Approx(oracle::sampled_cfl_dt(make_double_integrator(1.0, 0.1), g2, 0.5)).epsilon(1e-12));
    const Grid g4({{-2, 2, 9, false}, {-M_PI, M_PI, 12, true}, {-3, 3, 9, false}, {-7, 7, 9, false}});
    const SystemModel cp = make_cartpole();
    CHECK(cfl_dt(cp, g4, 0.5) == doctest::Approx(oracle::sampled_cfl_dt(cp, g4, 0.5)).epsilon(1e-12));
  }

  TEST_CASE("Lax-Friedrichs Hamiltonian examples") {
    const SystemModel m = make_integrator_1d();
    CHECK(numerical_hamiltonian(m, v1(0.0), v1(1.0), v1(1.0)) == doctest::Approx(1.0));
    // peak: averaged gradient 0, dissipation alpha * (dp - dm) / 2 = -1
    CHECK(numerical_hamiltonian(m, v1(0.0), v1(1.0), v1(-1.0)) == doctest::Approx(-1.0));
    CHECK(numerical_hamiltonian(m, v1(0.0), v1(-1.0), v1(1.0)) == doctest::Approx(1.0));
    const SystemModel di = make_double_integrator(1.0, 0.1);
    const Vec x = (Vec(2) << 0.0, 0.5).finished();
    const Vec g = (Vec(2) << 1.0, 2.0).finished();
    // H = 0.5 * 1 + 2 * 1 - 2 * 0.1
    CHECK(numerical_hamiltonian(di, x, g, g) == doctest::Approx(2.3));
  }

  TEST_CASE("clamps of one backward step") {
    const Grid g({{-1, 1, 21, false}});
    const SystemModel m = make_integrator_1d();
    const ImplicitSet target = ImplicitSet::box({{-0.2, 0.2}});
    const ImplicitSet failure = ImplicitSet::box({{0.6, 2.0}});
    const double dt = cfl_dt(m, g, 0.5);
    std::vector<double> low(g.size(), -5.0), high(g.size(), 5.0);
    const auto tube_low = step_backward(low, dt, m, g, target, failure, SolveMode::Tube);
    const auto fixed_high = step_backward(high, dt, m, g, target, failure, SolveMode::FixedTime);
    const auto avoid_high = step_backward(high, dt, m, g, target, failure, SolveMode::AvoidOnly);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Vec x = g.node(k);
      const double l = target_margin(target, x), gm = failure_margin(failure, x);
      CHECK(tube_low[k] == std::min(l, gm));
      CHECK(fixed_high[k] <= gm);
      CHECK(avoid_high[k] <= gm);
    }
    CHECK_THROWS_AS(step_backward(low, 2 * cfl_dt(m, g, 1.0), m, g, target, failure, SolveMode::Tube),
                    ContractViolation);
  }

  TEST_CASE("terminal slices") {
    const Grid g({{-1, 1, 5, false}});
    const ImplicitSet target = ImplicitSet::box({{-0.5, 0.5}});
    const ImplicitSet failure = ImplicitSet::box({{0.75, 2.0}});
    const auto ft = terminal_slice(g, target, failure, SolveMode::FixedTime);
    const auto ao = terminal_slice(g, target, failure, SolveMode::AvoidOnly);
    CHECK(ft[2] == doctest::Approx(0.5));
    CHECK(ft[4] == doctest::Approx(-0.5));
    CHECK(ao[0] == doctest::Approx(1.75));
    CHECK(ao[4] == doctest::Approx(-0.25));
  }

  TEST_CASE("horizon shorter than one CFL step stores only the terminal slice") {
    const ValueGrid vg = solve_line(SolveMode::Tube, 0.005);
    CHECK(vg.times.size() == 1);
    CHECK(vg.provenance["steps"] == 0);
  }

  TEST_CASE("step count and snapshot stride") {
    const ValueGrid vg = solve_line(SolveMode::FixedTime, 0.3, 7);
    CHECK(vg.provenance["steps"] == 30);
    // 0, every 7th step, and the last one
    CHECK(vg.times.size() == 1 + 4 + 1);
    CHECK(vg.times.back() == doctest::Approx(-0.3));
    CHECK(vg.times[1] == doctest::Approx(-0.07));
  }

  TEST_CASE("tube solves stop once converged") {
    const SetPreset sets = set_preset("integrator_1d");
    SolveSpec spec;
    spec.horizon = 10.0;
    spec.convergence_tol = 1e-6;
    const Grid g({{-1, 1, 41, false}});
    const ValueGrid vg = solve(make_integrator_1d(), g, sets.target, sets.failure, spec);
    CHECK(vg.converged);
    CHECK(vg.horizon() < 10.0);
    CHECK(value_at(vg, Vec::Constant(1, 0.9), -50.0) >= 0.0);
  }

  TEST_CASE("grid faces do not import value from outside the domain") {
    const Grid g({{-2, 2, 61, false}, {-2, 2, 61, false}});
    const SetPreset sets = set_preset("double_integrator");
    SolveSpec spec;
    spec.mode = SolveMode::FixedTime;
    const ValueGrid vg = solve(make_double_integrator(), g, sets.target, sets.failure, spec);
    // v = -2 toward the wall at -1.5: the wall is reached before t = 0.6 whatever u does
    for (double p : {-0.6, -0.4, -0.2}) {
      CHECK(value_at(vg, (Vec(2) << p, -2.0).finished(), -1.0) < 0.0);
      CHECK(value_at(vg, (Vec(2) << -p, 2.0).finished(), -1.0) < 0.0);
    }
  }

  TEST_CASE("non-finite values are reported with the node") {
    SolveSpec spec;
    spec.mode = SolveMode::FixedTime;
    try {
      solve(make_integrator_1d(), line_grid(), ImplicitSet::empty(1), ImplicitSet::empty(1), spec);
      FAIL("solver accepted an infinite terminal value");
    } catch (const InstabilityError& e) {
      CHECK(std::string(e.what()).find("node [0]") != std::string::npos);
    }
  }

  TEST_CASE("residual checks pass on the 1-D solve") {
    const ValueGrid vg = solve_line(SolveMode::Tube);
    const SetPreset sets = set_preset("integrator_1d");
    const auto rep = check_residuals(make_integrator_1d(), vg, sets.target, sets.failure, SolveMode::Tube);
    CHECK(rep.vi_checked > 0);
    CHECK(rep.vi_fraction() >= 0.99);
    CHECK(rep.cbf_fraction() >= 0.99);
  }

  TEST_CASE("provenance records the solve") {
    const ValueGrid vg = solve_line(SolveMode::Tube, 0.1);
    CHECK(vg.provenance["mode"] == "tube");
    CHECK(vg.provenance["dt"].get<double>() == doctest::Approx(0.01));
    CHECK(vg.provenance["horizon"].get<double>() == 0.1);
    CHECK_THROWS_AS(solve_mode_from("sideways"), ConfigError);
  }
}
