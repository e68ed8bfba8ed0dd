#pragma once

#include "racbf/dynamics.hpp"
#include "racbf/valuefn.hpp"

#include <optional>
#include <string>

namespace racbf {

enum class Fallback { OptimalControl, Reject };
enum class FilterStatus { PassThrough, Modified, Fallback, Rejected };

std::string to_string(FilterStatus status);
std::string to_string(Fallback fallback);
Fallback fallback_from(const std::string& name);

struct FilterConfig {
  double gamma = 1.0;               // alpha(h) = gamma * h
  double constraint_slack = 1e-8;   // added to the right-hand side
  double dual_tol = 1e-10;          // bisection width on the multiplier
  Fallback fallback = Fallback::OptimalControl;

  void validate() const;
};

/// Affine form a'u >= b of the barrier condition
///   dV/dt + min_d grad V' f(x, u, d) >= -gamma V.
struct ConstraintTerms {
  Vec a;
  double b = 0.0;
  double value = 0.0;             // V(x, t)
  double time_term = 0.0;         // dV/dt
  double drift_term = 0.0;        // grad V' f0(x)
  double disturbance_term = 0.0;  // min_d grad V' h0(x) d
  double margin_term = 0.0;       // gamma * V
};

ConstraintTerms constraint_terms(const ValueGrid& vg, const SystemModel& model, const Vec& x, double t,
                                 const FilterConfig& cfg);

/// min ||u - u_nom||^2  s.t.  a'u >= b,  lo <= u <= hi.
///
/// Returns nullopt if the constraint cannot be met inside the box. Otherwise
/// the minimizer is u(mu) = clamp(u_nom + mu a) with the smallest feasible
/// multiplier mu >= 0, found by bisection to `dual_tol`; the returned point is
/// always on the feasible side. A feasible clamp(u_nom) is returned as is.
std::optional<Vec> project_halfspace_box(const Vec& a, double b, const Vec& u_nom, const Vec& lo, const Vec& hi,
                                         double dual_tol = 1e-10);

struct FilterResult {
  Vec u;
  FilterStatus status = FilterStatus::PassThrough;
  std::optional<ConstraintTerms> terms;  // absent when the state left the domain
};

/// Minimally modifies u_nom so that the barrier condition holds. Infeasible
/// constraints, states outside the safe set and states outside the grid go
/// through the configured fallback.
FilterResult filter_control(const ValueGrid& vg, const SystemModel& model, const Vec& x, double t, const Vec& u_nom,
                            const FilterConfig& cfg);

/// argmax_u min_d grad V' f(x, u, d).
Vec optimal_control(const ValueGrid& vg, const SystemModel& model, const Vec& x, double t);

bool feasible(const ValueGrid& vg, const SystemModel& model, const Vec& x, double t, const Vec& u,
              const FilterConfig& cfg);

}  // namespace racbf
