#pragma once

#include <Eigen/Core>

#include <span>

namespace racbf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Convex compact input set: an axis-aligned box or a Euclidean ball.
///
/// Holds the control set U and the disturbance set D. A zero-dimensional set
/// stands for "no input channel".
class BoundSet {
public:
  enum class Kind { Box, Ball };

  BoundSet() = default;

  static BoundSet box(Vec lo, Vec hi);
  static BoundSet ball(Vec center, double radius);
  static BoundSet none() { return box(Vec(0), Vec(0)); }

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(kind_ == Kind::Box ? lo_.size() : center_.size()); }
  bool empty() const { return dim() == 0; }

  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }

  bool contains(const Vec& v, double tol = 1e-9) const;
  Vec clamp(const Vec& v) const;

  // Support functions: max/min over the set of w.v. The optimizer is written
  // to `arg` when non-empty. Ties go to lo (box) or to the center (ball).
  double support_max(std::span<const double> w, std::span<double> arg = {}) const;
  double support_min(std::span<const double> w, std::span<double> arg = {}) const;

  double support_max(const Vec& w) const { return support_max(std::span<const double>(w.data(), w.size())); }
  double support_min(const Vec& w) const { return support_min(std::span<const double>(w.data(), w.size())); }

  /// max over the set of |w.v|
  double max_abs(std::span<const double> w) const;

private:
  Kind kind_ = Kind::Box;
  Vec lo_, hi_;
  Vec center_;
  double radius_ = 0.0;
};

}  // namespace racbf
