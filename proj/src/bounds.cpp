#include "racbf/bounds.hpp"

#include "racbf/error.hpp"

#include <algorithm>
#include <cmath>

namespace racbf {

BoundSet BoundSet::box(Vec lo, Vec hi) {
  RACBF_REQUIRE(lo.size() == hi.size(), "box bounds: lo/hi size mismatch");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    RACBF_REQUIRE(std::isfinite(lo[i]) && std::isfinite(hi[i]), "box bounds must be finite");
    RACBF_REQUIRE(lo[i] <= hi[i], "box bounds require lo <= hi");
  }
  BoundSet s;
  s.kind_ = Kind::Box;
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

BoundSet BoundSet::ball(Vec center, double radius) {
  RACBF_REQUIRE(std::isfinite(radius) && radius >= 0.0, "ball radius must be finite and >= 0");
  RACBF_REQUIRE(center.allFinite(), "ball center must be finite");
  BoundSet s;
  s.kind_ = Kind::Ball;
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

bool BoundSet::contains(const Vec& v, double tol) const {
  if (v.size() != dim()) return false;
  if (kind_ == Kind::Box) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!(v[i] >= lo_[i] - tol && v[i] <= hi_[i] + tol)) return false;
    return true;
  }
  return (v - center_).norm() <= radius_ + tol;
}

Vec BoundSet::clamp(const Vec& v) const {
  RACBF_REQUIRE(v.size() == dim(), "clamp: dimension mismatch");
  if (kind_ == Kind::Box) return v.cwiseMax(lo_).cwiseMin(hi_);
  const Vec off = v - center_;
  const double n = off.norm();
  if (n <= radius_) return v;
  return center_ + off * (radius_ / n);
}

double BoundSet::support_max(std::span<const double> w, std::span<double> arg) const {
  const std::size_t n = w.size();
  if (kind_ == Kind::Box) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = w[i] * lo_[i];
      const double b = w[i] * hi_[i];
      if (b > a) {
        total += b;
        if (!arg.empty()) arg[i] = hi_[i];
      } else {
        total += a;
        if (!arg.empty()) arg[i] = lo_[i];
      }
    }
    return total;
  }
  double dot = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += w[i] * center_[i];
    sq += w[i] * w[i];
  }
  const double norm = std::sqrt(sq);
  if (!arg.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      arg[i] = norm > 0.0 ? center_[i] + radius_ * w[i] / norm : center_[i];
  }
  return dot + radius_ * norm;
}

double BoundSet::support_min(std::span<const double> w, std::span<double> arg) const {
  const std::size_t n = w.size();
  if (kind_ == Kind::Box) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = w[i] * lo_[i];
      const double b = w[i] * hi_[i];
      if (b < a) {
        total += b;
        if (!arg.empty()) arg[i] = hi_[i];
      } else {
        total += a;
        if (!arg.empty()) arg[i] = lo_[i];
      }
    }
    return total;
  }
  double dot = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += w[i] * center_[i];
    sq += w[i] * w[i];
  }
  const double norm = std::sqrt(sq);
  if (!arg.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      arg[i] = norm > 0.0 ? center_[i] - radius_ * w[i] / norm : center_[i];
  }
  return dot - radius_ * norm;
}

double BoundSet::max_abs(std::span<const double> w) const {
  return std::max(support_max(w), -support_min(w));
}

}  // namespace racbf
