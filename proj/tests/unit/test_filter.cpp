#include "oracles/box_qp.hpp"
#include "racbf/error.hpp"
#include "racbf/filter.hpp"
#include "racbf/hjsolver.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace racbf;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

// V(x) = 0.5 - |x| on [-1, 1], a single converged slice.
ValueGrid tent() {
  ValueGrid vg;
  vg.grid = Grid({{-1.0, 1.0, 21, false}});
  vg.times = {0.0};
  vg.converged = true;
  std::vector<double> s(vg.grid.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = 0.5 - std::abs(vg.grid.node(k)[0]);
  vg.slices = {s};
  return vg;
}

}  // namespace

TEST_SUITE("filter") {
  TEST_CASE("projection matches active-set enumeration on random instances") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::uniform_int_distribution<int> P(1, 4);
    int feasible = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      const int p = P(rng);
      Vec a(p), u0(p), lo(p), hi(p);
      for (int i = 0; i < p; ++i) {
        a[i] = U(rng);
        u0[i] = 1.5 * U(rng);
        const double c = 0.5 * U(rng), w = 0.1 + std::abs(U(rng));
        lo[i] = c - w;
        hi[i] = c + w;
      }
      const double b = U(rng);
      const auto got = project_halfspace_box(a, b, u0, lo, hi);
      const auto want = oracle::box_halfspace_qp(a, b, u0, lo, hi);
      REQUIRE(got.has_value() == want.has_value());
      if (!got) continue;
      ++feasible;
      CHECK(a.dot(*got) >= b);
      CHECK(((*got - lo).minCoeff() >= 0.0 && (hi - *got).minCoeff() >= 0.0));
      CHECK((*got - want->u).cwiseAbs().maxCoeff() <= 1e-6);
    }
    CHECK(feasible > 5000);
  }

  TEST_CASE("projection agrees with a dense search over a 2-D box") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const Vec lo = Vec::Constant(2, -1.0), hi = Vec::Constant(2, 1.0);
    const double h = 2.0 / 200;
    for (int trial = 0; trial < 20; ++trial) {
      const Vec a = (Vec(2) << U(rng), U(rng)).finished();
      const Vec u0 = (Vec(2) << U(rng), U(rng)).finished();
      const double b = 0.8 * U(rng);
      const auto got = project_halfspace_box(a, b, u0, lo, hi);
      double best = INFINITY;
      for (int i = 0; i <= 200; ++i)
        for (int j = 0; j <= 200; ++j) {
          const Vec u = (Vec(2) << -1 + i * h, -1 + j * h).finished();
          if (a.dot(u) >= b) best = std::min(best, (u - u0).squaredNorm());
        }
      if (!got) {
        CHECK(best == INFINITY);
        continue;
      }
      const double obj = (*got - u0).squaredNorm();
      // the dense search only sees grid points, so it can be worse but never much better
      CHECK(obj <= best + 1e-12);
      CHECK(obj >= best - 4 * h * std::sqrt(2.0) * 3.0);
    }
  }

  TEST_CASE("projection corner cases") {
    const Vec lo = v1(-1), hi = v1(1);
    CHECK((*project_halfspace_box(v1(1), 0.5, v1(0.0), lo, hi))[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK((*project_halfspace_box(v1(1), 0.5, v1(0.9), lo, hi))[0] == 0.9);
    CHECK((*project_halfspace_box(v1(1), 0.5, v1(3.0), lo, hi))[0] == 1.0);
    CHECK_FALSE(project_halfspace_box(v1(1), 1.5, v1(0.0), lo, hi).has_value());
    CHECK_FALSE(project_halfspace_box(v1(0), 0.1, v1(0.0), lo, hi).has_value());
    CHECK(project_halfspace_box(v1(0), -0.1, v1(0.0), lo, hi).has_value());
  }

  TEST_CASE("constraint terms and filtering on a tent value") {
    const ValueGrid vg = tent();
    const SystemModel m = make_integrator_1d();
    FilterConfig cfg;
    const ConstraintTerms c = constraint_terms(vg, m, v1(0.4), 0.0, cfg);
    CHECK(c.value == doctest::Approx(0.1));
    CHECK(c.a[0] == doctest::Approx(-1.0));
    CHECK(c.time_term == 0.0);
    CHECK(c.b == doctest::Approx(-0.1 + cfg.constraint_slack));

    const FilterResult pass = filter_control(vg, m, v1(0.4), 0.0, v1(0.0), cfg);
    CHECK(pass.status == FilterStatus::PassThrough);
    CHECK(pass.u[0] == 0.0);

    const FilterResult mod = filter_control(vg, m, v1(0.4), 0.0, v1(1.0), cfg);
    CHECK(mod.status == FilterStatus::Modified);
    CHECK(mod.u[0] == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(feasible(vg, m, v1(0.4), 0.0, mod.u, cfg));
  }

  TEST_CASE("fallbacks") {
    const ValueGrid vg = tent();
    const SystemModel m = make_integrator_1d();
    FilterConfig cfg;
    const FilterResult out = filter_control(vg, m, v1(0.7), 0.0, v1(1.0), cfg);
    CHECK(out.status == FilterStatus::Fallback);
    CHECK(out.u[0] == -1.0);
    const FilterResult away = filter_control(vg, m, v1(-3.0), 0.0, v1(-1.0), cfg);
    CHECK(away.status == FilterStatus::Fallback);
    CHECK(away.u[0] == 1.0);
    CHECK_FALSE(away.terms.has_value());
    CHECK_THROWS_AS(optimal_control(vg, m, v1(-3.0), 0.0), ContractViolation);

    cfg.fallback = Fallback::Reject;
    const FilterResult rej = filter_control(vg, m, v1(0.7), 0.0, v1(2.0), cfg);
    CHECK(rej.status == FilterStatus::Rejected);
    CHECK(rej.u[0] == 1.0);
  }

  TEST_CASE("the barrier constraint is feasible away from the zero level and kinks") {
    const Grid g({{-2.0, 2.0, 61, false}, {-2.0, 2.0, 61, false}});
    const SetPreset sets = set_preset("double_integrator");
    SolveSpec spec;
    spec.mode = SolveMode::FixedTime;
    const ValueGrid vg = solve(make_double_integrator(), g, sets.target, sets.failure, spec);
    const SystemModel m = make_double_integrator();
    FilterConfig cfg;
    cfg.fallback = Fallback::Reject;
    for (double t : {-0.25, -0.5, -1.0}) {
      const std::vector<double> s = slice_at(vg, t);
      // one-sided difference jump per node, max over dimensions
      std::vector<double> jump(g.size(), 0.0);
      std::vector<char> band(g.size(), 0);
      for (std::size_t k = 0; k < g.size(); ++k) {
        int idx[2];
        g.multi_index(k, idx);
        for (int i = 0; i < 2; ++i) {
          if (idx[i] == 0 || idx[i] == g.dim(i).count - 1) {
            band[k] = 1;
            continue;
          }
          const double vl = s[k - g.stride(i)], vh = s[k + g.stride(i)];
          jump[k] = std::max(jump[k], std::abs((vh - s[k]) - (s[k] - vl)) / g.dim(i).spacing());
          if (vl < 0.0 || vh < 0.0) band[k] = 1;
        }
      }
      std::vector<double> inside;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (s[k] >= 0.0 && !band[k]) inside.push_back(jump[k]);
      REQUIRE(inside.size() > 50);
      std::nth_element(inside.begin(), inside.begin() + inside.size() / 2, inside.end());
      const double median = inside[inside.size() / 2];
      int checked = 0, rejected = 0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (s[k] < 0.0 || band[k] || jump[k] > 10.0 * std::max(median, 1e-12)) continue;
        ++checked;
        rejected += filter_control(vg, m, g.node(k), t, Vec::Zero(1), cfg).status == FilterStatus::Rejected;
      }
      CHECK(checked > 50);
      CHECK(rejected == 0);
    }
  }

  TEST_CASE("larger gamma never moves the control further") {
    const ValueGrid vg = tent();
    const SystemModel m = make_integrator_1d();
    for (double x : {0.05, 0.2, 0.35, 0.45}) {
      double prev = INFINITY;
      for (double gamma : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
        FilterConfig cfg;
        cfg.gamma = gamma;
        const FilterResult r = filter_control(vg, m, v1(x), 0.0, v1(1.0), cfg);
        const double moved = std::abs(r.u[0] - 1.0);
        CHECK(moved <= prev + 1e-9);
        prev = moved;
      }
    }
  }

  TEST_CASE("configuration checks") {
    FilterConfig cfg;
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ContractViolation);
    CHECK(fallback_from("reject") == Fallback::Reject);
    CHECK_THROWS_AS(fallback_from("pray"), ConfigError);
    CHECK(to_string(FilterStatus::PassThrough) == "pass_through");
  }
}
