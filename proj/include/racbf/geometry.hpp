#pragma once

#include "racbf/bounds.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace racbf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval; either end may be infinite ("unbounded" sentinel).
struct Interval {
  double lo = -kInf;
  double hi = kInf;
};

/// Angle axis wrapping to [lo, hi).
struct Period {
  double lo;
  double hi;
};

/// Implicit description of a set through a signed margin function:
/// positive strictly inside, zero on the boundary, negative outside.
///
/// Boxes use the infinity-norm signed distance, which is exact for a single
/// box and 1-Lipschitz. Unions take the max over members and complements
/// negate, so both stay 1-Lipschitz. On a periodic axis the distance is
/// measured along the circle.
class ImplicitSet {
public:
  ImplicitSet();  // empty set in zero dimensions; margin is -inf

  static ImplicitSet box(std::vector<Interval> intervals, std::vector<std::optional<Period>> periods = {});
  static ImplicitSet union_of(std::vector<ImplicitSet> members, int dim);
  static ImplicitSet complement(const ImplicitSet& set);
  static ImplicitSet empty(int dim) { return union_of({}, dim); }

  int dim() const;
  double margin(const Vec& x) const;

  /// Box intervals if this set is a single box.
  std::optional<std::vector<Interval>> box_intervals() const;
  std::vector<std::optional<Period>> box_periods() const;
  /// Same set type with every box interval widened by pad[i] on both sides.
  ImplicitSet inflated(const Vec& pad) const;

private:
  struct Node;
  explicit ImplicitSet(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// l(x): >= 0 exactly on the target.
inline double target_margin(const ImplicitSet& target, const Vec& x) { return target.margin(x); }
/// g(x): < 0 exactly on the failure set (given as the failure set itself).
inline double failure_margin(const ImplicitSet& failure, const Vec& x) { return -failure.margin(x); }

/// Target and failure sets shipped with the built-in systems.
struct SetPreset {
  std::string name;
  ImplicitSet target;
  ImplicitSet failure;
};

/// "cartpole_paper", "cartpole_paper_literal", "double_integrator" or
/// "integrator_1d"; ConfigError otherwise.
SetPreset set_preset(const std::string& name);

/// Signed per-coordinate distance of x to the target box intervals
/// (0 inside, negative below lo, positive above hi). Periodic axes use the
/// wrapped coordinate; intervals covering a full period give 0.
Vec target_offsets(const std::vector<Interval>& box, const std::vector<std::optional<Period>>& periods, const Vec& x);

}  // namespace racbf
