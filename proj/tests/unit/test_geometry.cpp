#include "racbf/error.hpp"
#include "racbf/geometry.hpp"
#include "racbf/grid.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace racbf;
using std::numbers::pi;

namespace {

Vec z4(double a, double b, double c, double d) { return (Vec(4) << a, b, c, d).finished(); }

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("grid node coordinates") {
    const Grid g1({{-1.0, 1.0, 3, false}});
    CHECK(g1.node(std::vector<int>{1})[0] == 0.0);
    CHECK(g1.node(std::vector<int>{0})[0] == -1.0);
    const Grid gp({{-pi, pi, 4, true}});
    CHECK(gp.node(std::vector<int>{3})[0] == doctest::Approx(pi / 2));
    CHECK_THROWS_AS(g1.node(std::vector<int>{3}), ContractViolation);
    CHECK_THROWS_AS(Grid({{0.0, 1.0, 2, false}}), ContractViolation);
  }

  TEST_CASE("grid flat and multi index round trip, last dimension fastest") {
    const Grid g({{0, 1, 3, false}, {0, 1, 4, false}, {0, 1, 5, true}});
    CHECK(g.size() == 60);
    CHECK(g.stride(2) == 1);
    CHECK(g.stride(0) == 20);
    std::vector<int> idx(3);
    for (std::size_t k = 0; k < g.size(); ++k) {
      g.multi_index(k, idx);
      CHECK(g.flat_index(idx) == k);
    }
  }

  TEST_CASE("wrap, contains and clamp") {
    const Grid g({{-1.0, 1.0, 5, false}, {-pi, pi, 8, true}});
    const Vec x = (Vec(2) << 0.5, pi + 0.1).finished();
    CHECK(g.wrap(x)[1] == doctest::Approx(-pi + 0.1));
    CHECK(g.contains(x));
    CHECK_FALSE(g.contains((Vec(2) << 1.2, 0.0).finished()));
    CHECK(g.clamp((Vec(2) << 1.2, 0.0).finished())[0] == 1.0);
    CHECK(wrap_periodic(pi, -pi, pi) == doctest::Approx(-pi));
    const double w = wrap_periodic(std::nextafter(pi, 0.0) - 2 * pi * 3, -pi, pi);
    CHECK(w >= -pi);
    CHECK(w < pi);
  }

  TEST_CASE("cartpole target margin") {
    const SetPreset p = set_preset("cartpole_paper");
    CHECK(target_margin(p.target, z4(-0.95, 0, 0, 0)) == doctest::Approx(0.1));
    CHECK(target_margin(p.target, z4(-1.1, 0, 0, 0)) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(target_margin(p.target, z4(0, 0, 0, 0)) < 0.0);
    CHECK(target_margin(p.target, z4(-0.95, 0.2, 0, 0)) == doctest::Approx(0.05));
    CHECK(target_margin(p.target, z4(-0.95, 2.5, 0, 0)) == doctest::Approx(-2.25));
    // literal variant: theta is unconstrained, any angle gives the same margin
    const SetPreset lit = set_preset("cartpole_paper_literal");
    CHECK(target_margin(lit.target, z4(-0.95, 2.5, 0, 0)) == doctest::Approx(0.1));
    CHECK(target_margin(lit.target, z4(-0.95, -3.0, 0, 0)) == doctest::Approx(0.1));
  }

  TEST_CASE("cartpole failure margin") {
    const SetPreset p = set_preset("cartpole_paper");
    CHECK(failure_margin(p.failure, z4(1.6, 0, 0, 0)) < 0.0);
    CHECK(failure_margin(p.failure, z4(-1.6, 0, 0, 0)) < 0.0);
    CHECK(failure_margin(p.failure, z4(0, 3 * pi / 16, 0, 0)) < 0.0);
    CHECK(failure_margin(p.failure, z4(0, 3 * pi / 16, 0, 0)) == doctest::Approx(-pi / 16));
    CHECK(failure_margin(p.failure, z4(0, 0, 0, 0)) > 0.0);
    CHECK(failure_margin(p.failure, z4(0, 3 * pi / 16 + 2 * pi, 0, 0)) < 0.0);
    // the angle band is measured along the circle
    CHECK(failure_margin(p.failure, z4(0, pi / 8 - 0.05, 0, 0)) == doctest::Approx(0.05));
    CHECK(failure_margin(p.failure, z4(0, pi / 4 + 0.05 - 2 * pi, 0, 0)) == doctest::Approx(0.05));
  }

  TEST_CASE("margins are 1-Lipschitz in the infinity norm") {
    const SetPreset p = set_preset("cartpole_paper");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int i = 0; i < 2000; ++i) {
      const Vec a = z4(U(rng), 1.6 * U(rng), U(rng), U(rng));
      const Vec b = a + 0.05 * z4(U(rng), U(rng), U(rng), U(rng));
      const double d = (a - b).cwiseAbs().maxCoeff();
      CHECK(std::abs(p.target.margin(a) - p.target.margin(b)) <= d + 1e-12);
      CHECK(std::abs(p.failure.margin(a) - p.failure.margin(b)) <= d + 1e-12);
    }
  }

  TEST_CASE("sign convention: positive inside, zero on the boundary, negative outside") {
    const ImplicitSet b = ImplicitSet::box({{-1.0, 1.0}, {0.0, 2.0}});
    CHECK(b.margin((Vec(2) << 0.0, 1.0).finished()) == doctest::Approx(1.0));
    CHECK(b.margin((Vec(2) << 1.0, 1.0).finished()) == 0.0);
    CHECK(b.margin((Vec(2) << 1.5, 3.0).finished()) == doctest::Approx(-1.0));
    const ImplicitSet c = ImplicitSet::complement(b);
    CHECK(c.margin((Vec(2) << 0.0, 1.0).finished()) == doctest::Approx(-1.0));
    const ImplicitSet u = ImplicitSet::union_of({b, ImplicitSet::box({{3.0, 4.0}, {0.0, 2.0}})}, 2);
    CHECK(u.margin((Vec(2) << 3.5, 1.0).finished()) == doctest::Approx(0.5));
    CHECK(ImplicitSet::empty(2).margin((Vec(2) << 0.0, 0.0).finished()) == -kInf);
  }

  TEST_CASE("inflated boxes") {
    const ImplicitSet b = ImplicitSet::box({{-1.0, 1.0}, {0.0, 2.0}});
    const ImplicitSet w = b.inflated((Vec(2) << 0.5, 0.25).finished());
    CHECK(w.margin((Vec(2) << 1.5, 1.0).finished()) == doctest::Approx(0.0));
    CHECK(w.margin((Vec(2) << 0.0, -0.25).finished()) == doctest::Approx(0.0));
    CHECK_THROWS_AS(ImplicitSet::complement(b).inflated((Vec(2) << 0.1, 0.1).finished()), ContractViolation);
  }

  TEST_CASE("target offsets") {
    const SetPreset p = set_preset("cartpole_paper");
    const auto box = *p.target.box_intervals();
    const auto periods = p.target.box_periods();
    const Vec inside = target_offsets(box, periods, z4(-0.9, 0.1, 0.05, -0.1));
    CHECK(inside.cwiseAbs().maxCoeff() == 0.0);
    const Vec out = target_offsets(box, periods, z4(0.0, 1.0, -0.3, 1.0));
    CHECK(out[0] == doctest::Approx(0.8));
    CHECK(out[1] == doctest::Approx(0.75));
    CHECK(out[2] == doctest::Approx(-0.2));
    CHECK(out[3] == doctest::Approx(0.75));
  }

  TEST_CASE("presets") {
    CHECK(set_preset("double_integrator").target.dim() == 2);
    CHECK(set_preset("integrator_1d").failure.margin(Vec::Zero(1)) == -kInf);
    CHECK_THROWS_AS(set_preset("nope"), ConfigError);
  }
}
