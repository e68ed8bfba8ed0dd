#include "racbf/geometry.hpp"

#include "racbf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <variant>

namespace racbf {

struct ImplicitSet::Node {
  struct Box {
    std::vector<Interval> intervals;
    std::vector<std::optional<Period>> periods;
  };
  struct Union {
    std::vector<ImplicitSet> members;
    int dim;
  };
  struct Complement {
    ImplicitSet inner;
  };
  std::variant<Box, Union, Complement> v;
};

namespace {

bool covers_period(const Interval& iv, const std::optional<Period>& p) {
  return p && (iv.hi - iv.lo) >= (p->hi - p->lo);
}

// Representative of x (mod period) closest to the interval midpoint.
double nearest_representative(double x, const Interval& iv, const Period& p) {
  const double mid = 0.5 * (iv.lo + iv.hi);
  return mid + std::remainder(x - mid, p.hi - p.lo);
}

double interval_margin(double x, const Interval& iv, const std::optional<Period>& p) {
  if (p) {
    if (covers_period(iv, p)) return kInf;
    x = nearest_representative(x, iv, *p);
  }
  return std::min(x - iv.lo, iv.hi - x);
}

}  // namespace

ImplicitSet::ImplicitSet() : node_(std::make_shared<Node>(Node{Node::Union{{}, 0}})) {}

ImplicitSet ImplicitSet::box(std::vector<Interval> intervals, std::vector<std::optional<Period>> periods) {
  RACBF_REQUIRE(!intervals.empty(), "box set needs at least one interval");
  if (periods.empty()) periods.resize(intervals.size());
  RACBF_REQUIRE(periods.size() == intervals.size(), "box set: periods size mismatch");
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    RACBF_REQUIRE(!std::isnan(intervals[i].lo) && !std::isnan(intervals[i].hi), "box set: NaN bound");
    RACBF_REQUIRE(intervals[i].lo <= intervals[i].hi, "box set: require lo <= hi");
    if (periods[i]) RACBF_REQUIRE(periods[i]->lo < periods[i]->hi, "box set: invalid period");
  }
  return ImplicitSet(std::make_shared<Node>(Node{Node::Box{std::move(intervals), std::move(periods)}}));
}

ImplicitSet ImplicitSet::union_of(std::vector<ImplicitSet> members, int dim) {
  for (const auto& m : members) RACBF_REQUIRE(m.dim() == dim, "union: member dimension mismatch");
  return ImplicitSet(std::make_shared<Node>(Node{Node::Union{std::move(members), dim}}));
}

ImplicitSet ImplicitSet::complement(const ImplicitSet& set) {
  return ImplicitSet(std::make_shared<Node>(Node{Node::Complement{set}}));
}

int ImplicitSet::dim() const {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Node::Box>) return static_cast<int>(n.intervals.size());
        else if constexpr (std::is_same_v<T, Node::Union>) return n.dim;
        else return n.inner.dim();
      },
      node_->v);
}

double ImplicitSet::margin(const Vec& x) const {
  RACBF_REQUIRE(x.size() == dim(), "margin: dimension mismatch");
  return std::visit(
      [&x](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Node::Box>) {
          double m = kInf;
          for (std::size_t i = 0; i < n.intervals.size(); ++i)
            m = std::min(m, interval_margin(x[static_cast<Eigen::Index>(i)], n.intervals[i], n.periods[i]));
          return m;
        } else if constexpr (std::is_same_v<T, Node::Union>) {
          double m = -kInf;
          for (const auto& s : n.members) m = std::max(m, s.margin(x));
          return m;
        } else {
          return -n.inner.margin(x);
        }
      },
      node_->v);
}

std::optional<std::vector<Interval>> ImplicitSet::box_intervals() const {
  if (const auto* b = std::get_if<Node::Box>(&node_->v)) return b->intervals;
  return std::nullopt;
}

std::vector<std::optional<Period>> ImplicitSet::box_periods() const {
  if (const auto* b = std::get_if<Node::Box>(&node_->v)) return b->periods;
  return {};
}

ImplicitSet ImplicitSet::inflated(const Vec& pad) const {
  RACBF_REQUIRE(pad.size() == dim(), "inflated: pad dimension mismatch");
  return std::visit(
      [&pad](const auto& n) -> ImplicitSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Node::Box>) {
          auto iv = n.intervals;
          for (std::size_t i = 0; i < iv.size(); ++i) {
            iv[i].lo -= pad[static_cast<Eigen::Index>(i)];
            iv[i].hi += pad[static_cast<Eigen::Index>(i)];
          }
          return ImplicitSet::box(std::move(iv), n.periods);
        } else if constexpr (std::is_same_v<T, Node::Union>) {
          std::vector<ImplicitSet> members;
          for (const auto& s : n.members) members.push_back(s.inflated(pad));
          return ImplicitSet::union_of(std::move(members), n.dim);
        } else {
          throw ContractViolation("inflated: complements are not supported");
        }
      },
      node_->v);
}

Vec target_offsets(const std::vector<Interval>& box, const std::vector<std::optional<Period>>& periods, const Vec& x) {
  RACBF_REQUIRE(static_cast<Eigen::Index>(box.size()) == x.size(), "target_offsets: dimension mismatch");
  Vec out = Vec::Zero(x.size());
  for (std::size_t i = 0; i < box.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const std::optional<Period> p = i < periods.size() ? periods[i] : std::nullopt;
    if (covers_period(box[i], p)) continue;
    const double xi = p ? nearest_representative(x[k], box[i], *p) : x[k];
    if (xi < box[i].lo) out[k] = xi - box[i].lo;
    else if (xi > box[i].hi) out[k] = xi - box[i].hi;
  }
  return out;
}

SetPreset set_preset(const std::string& name) {
  using std::numbers::pi;
  if (name == "cartpole_paper" || name == "cartpole_paper_literal") {
    const std::optional<Period> ang = Period{-pi, pi};
    const std::vector<std::optional<Period>> periods = {std::nullopt, ang, std::nullopt, std::nullopt};
    const Interval any{};
    // The default rests hanging down, |theta| <= 0.25. The literal variant leaves
    // theta free, which is not invariant: a pole at rest near horizontal counts
    // as arrived and then falls through the angle band.
    const Interval theta = name == "cartpole_paper" ? Interval{-0.25, 0.25} : Interval{-pi - 0.25, pi + 0.25};
    ImplicitSet target = ImplicitSet::box({{-1.1, -0.8}, theta, {-0.1, 0.1}, {-0.25, 0.25}}, periods);
    ImplicitSet failure = ImplicitSet::union_of(
        {
            ImplicitSet::box({{-kInf, -1.5}, any, any, any}, periods),
            ImplicitSet::box({{1.5, kInf}, any, any, any}, periods),
            ImplicitSet::box({any, {pi / 8.0, pi / 4.0}, any, any}, periods),
        },
        4);
    return {name, std::move(target), std::move(failure)};
  }
  if (name == "double_integrator") {
    const Interval any{};
    ImplicitSet target = ImplicitSet::box({{-0.5, 0.5}, {-0.5, 0.5}});
    ImplicitSet failure = ImplicitSet::union_of(
        {
            ImplicitSet::box({{-kInf, -1.5}, any}),
            ImplicitSet::box({{1.5, kInf}, any}),
            ImplicitSet::box({{0.7, 1.1}, {-0.3, 0.3}}),
        },
        2);
    return {name, std::move(target), std::move(failure)};
  }
  if (name == "integrator_1d") {
    return {name, ImplicitSet::box({{-0.3, 0.3}}), ImplicitSet::empty(1)};
  }
  throw ConfigError("unknown set preset '" + name + "'");
}

}  // namespace racbf
