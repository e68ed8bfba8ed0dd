#pragma once

#include "racbf/bounds.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace racbf {

struct GridDim {
  double lo = 0.0;
  double hi = 1.0;
  int count = 3;
  bool periodic = false;

  /// (hi-lo)/(count-1), or (hi-lo)/count on periodic axes where hi aliases lo.
  double spacing() const { return periodic ? (hi - lo) / count : (hi - lo) / (count - 1); }
  double coordinate(int idx) const { return lo + idx * spacing(); }
  bool operator==(const GridDim&) const = default;
};

/// Rectilinear grid, row-major with the last dimension fastest.
class Grid {
public:
  Grid() = default;
  explicit Grid(std::vector<GridDim> dims);

  int ndim() const { return static_cast<int>(dims_.size()); }
  const GridDim& dim(int i) const { return dims_[i]; }
  const std::vector<GridDim>& dims() const { return dims_; }
  std::size_t size() const { return size_; }
  std::size_t stride(int i) const { return strides_[i]; }

  std::size_t flat_index(std::span<const int> idx) const;
  void multi_index(std::size_t flat, std::span<int> idx) const;

  /// Node coordinates; throws ContractViolation for out-of-range indices.
  Vec node(std::span<const int> idx) const;
  Vec node(std::size_t flat) const;

  /// Wraps periodic coordinates into [lo, hi).
  Vec wrap(const Vec& x) const;
  /// True when every non-periodic coordinate is inside [lo, hi].
  bool contains(const Vec& x) const;
  /// Projects non-periodic coordinates onto [lo, hi] and wraps periodic ones.
  Vec clamp(const Vec& x) const;

  bool operator==(const Grid& o) const { return dims_ == o.dims_; }

private:
  std::vector<GridDim> dims_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Wraps a periodic coordinate into [lo, hi).
double wrap_periodic(double x, double lo, double hi);

}  // namespace racbf
