#include "racbf/filter.hpp"

#include "racbf/error.hpp"

#include <algorithm>
#include <cmath>

namespace racbf {

std::string to_string(FilterStatus status) {
  switch (status) {
    case FilterStatus::PassThrough: return "pass_through";
    case FilterStatus::Modified: return "modified";
    case FilterStatus::Fallback: return "fallback";
    case FilterStatus::Rejected: return "rejected";
  }
  return "unknown";
}

std::string to_string(Fallback fallback) {
  return fallback == Fallback::OptimalControl ? "optimal_control" : "reject";
}

Fallback fallback_from(const std::string& name) {
  if (name == "optimal_control" || name == "optimal-control") return Fallback::OptimalControl;
  if (name == "reject") return Fallback::Reject;
  throw ConfigError("unknown filter fallback '" + name + "'");
}

void FilterConfig::validate() const {
  RACBF_REQUIRE(gamma > 0.0, "filter: gamma must be > 0");
  RACBF_REQUIRE(constraint_slack >= 0.0, "filter: constraint_slack must be >= 0");
  RACBF_REQUIRE(dual_tol > 0.0, "filter: dual_tol must be > 0");
}

ConstraintTerms constraint_terms(const ValueGrid& vg, const SystemModel& model, const Vec& x, double t,
                                 const FilterConfig& cfg) {
  const ValueSample s = sample(vg, x, t);
  ConstraintTerms c;
  c.value = s.value;
  c.time_term = s.time_derivative;
  c.a = model.control_jacobian(x).transpose() * s.gradient;
  c.drift_term = s.gradient.dot(model.drift(x));
  if (model.disturbance_dim > 0) {
    const Vec w = model.disturbance_jacobian(x).transpose() * s.gradient;
    c.disturbance_term = model.disturbance_bounds.support_min(w);
  }
  c.margin_term = cfg.gamma * s.value;
  c.b = -c.time_term - c.drift_term - c.disturbance_term - c.margin_term + cfg.constraint_slack;
  return c;
}

namespace {

Vec clamp_box(const Vec& v, const Vec& lo, const Vec& hi) { return v.cwiseMax(lo).cwiseMin(hi); }

}  // namespace

std::optional<Vec> project_halfspace_box(const Vec& a, double b, const Vec& u_nom, const Vec& lo, const Vec& hi,
                                         double dual_tol) {
  RACBF_REQUIRE(a.size() == u_nom.size() && lo.size() == a.size() && hi.size() == a.size(),
                "project_halfspace_box: dimension mismatch");
  const Vec u0 = clamp_box(u_nom, lo, hi);
  if (a.dot(u0) >= b) return u0;

  // Constrained maximizer of a'u over the box; coordinates with a_i = 0 stay at u0.
  Vec u_top = u0;
  double mu_max = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) u_top[i] = hi[i];
    else if (a[i] < 0.0) u_top[i] = lo[i];
    else continue;
    mu_max = std::max(mu_max, (u_top[i] - u_nom[i]) / a[i]);
  }
  if (a.dot(u_top) < b) return std::nullopt;

  // a'clamp(u_nom + mu a) is nondecreasing in mu
  double mu_lo = 0.0, mu_hi = mu_max;
  for (int it = 0; it < 400 && mu_hi - mu_lo > dual_tol; ++it) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    if (mid <= mu_lo || mid >= mu_hi) break;
    if (a.dot(clamp_box(u_nom + mid * a, lo, hi)) >= b) mu_hi = mid;
    else mu_lo = mid;
  }
  Vec u = clamp_box(u_nom + mu_hi * a, lo, hi);
  if (a.dot(u) < b) u = u_top;  // rounding at mu_max
  return u;
}

Vec optimal_control(const ValueGrid& vg, const SystemModel& model, const Vec& x, double t) {
  if (!vg.grid.contains(x)) throw ContractViolation("optimal_control: state outside the value-function domain");
  return hamiltonian(model, x, spatial_gradient(vg, x, t)).u_star;
}

FilterResult filter_control(const ValueGrid& vg, const SystemModel& model, const Vec& x, double t, const Vec& u_nom,
                            const FilterConfig& cfg) {
  RACBF_REQUIRE(model.control_bounds.kind() == BoundSet::Kind::Box, "filter_control: control set must be a box");
  RACBF_REQUIRE(u_nom.size() == model.control_dim, "filter_control: control dimension mismatch");
  const Vec& lo = model.control_bounds.lo();
  const Vec& hi = model.control_bounds.hi();
  const Vec u0 = clamp_box(u_nom, lo, hi);

  FilterResult r;
  auto fallback = [&](const Vec& at) {
    if (cfg.fallback == Fallback::OptimalControl) {
      r.u = hamiltonian(model, at, spatial_gradient(vg, at, t)).u_star;
      r.status = FilterStatus::Fallback;
    } else {
      r.u = u0;
      r.status = FilterStatus::Rejected;
    }
    return r;
  };

  if (!vg.grid.contains(x)) return fallback(vg.grid.clamp(x));

  r.terms = constraint_terms(vg, model, x, t, cfg);
  const ConstraintTerms& c = *r.terms;
  if (c.value < 0.0 || !c.a.allFinite() || !std::isfinite(c.b)) return fallback(x);

  if (c.a.dot(u0) >= c.b) {
    r.u = u0;
    r.status = FilterStatus::PassThrough;
    return r;
  }
  if (auto u = project_halfspace_box(c.a, c.b, u0, lo, hi, cfg.dual_tol)) {
    r.u = *u;
    r.status = FilterStatus::Modified;
    return r;
  }
  return fallback(x);
}

bool feasible(const ValueGrid& vg, const SystemModel& model, const Vec& x, double t, const Vec& u,
              const FilterConfig& cfg) {
  const ConstraintTerms c = constraint_terms(vg, model, x, t, cfg);
  return c.a.dot(u) >= c.b;
}

}  // namespace racbf
