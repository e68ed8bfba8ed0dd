#include "racbf/grid.hpp"

#include "racbf/error.hpp"

#include <cmath>
#include <string>

namespace racbf {

Grid::Grid(std::vector<GridDim> dims) : dims_(std::move(dims)) {
  RACBF_REQUIRE(!dims_.empty(), "grid needs at least one dimension");
  strides_.assign(dims_.size(), 1);
  size_ = 1;
  for (int i = ndim() - 1; i >= 0; --i) {
    const GridDim& d = dims_[i];
    RACBF_REQUIRE(std::isfinite(d.lo) && std::isfinite(d.hi) && d.lo < d.hi,
                  "grid dim " + std::to_string(i) + ": require finite lo < hi");
    RACBF_REQUIRE(d.count >= 3, "grid dim " + std::to_string(i) + ": node count must be >= 3");
    strides_[i] = size_;
    size_ *= static_cast<std::size_t>(d.count);
  }
}

std::size_t Grid::flat_index(std::span<const int> idx) const {
  RACBF_REQUIRE(static_cast<int>(idx.size()) == ndim(), "flat_index: dimension mismatch");
  std::size_t flat = 0;
  for (int i = 0; i < ndim(); ++i) {
    RACBF_REQUIRE(idx[i] >= 0 && idx[i] < dims_[i].count, "grid index out of range");
    flat += static_cast<std::size_t>(idx[i]) * strides_[i];
  }
  return flat;
}

void Grid::multi_index(std::size_t flat, std::span<int> idx) const {
  RACBF_REQUIRE(flat < size_, "flat index out of range");
  for (int i = 0; i < ndim(); ++i) {
    idx[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
}

Vec Grid::node(std::span<const int> idx) const {
  RACBF_REQUIRE(static_cast<int>(idx.size()) == ndim(), "node: dimension mismatch");
  Vec x(ndim());
  for (int i = 0; i < ndim(); ++i) {
    RACBF_REQUIRE(idx[i] >= 0 && idx[i] < dims_[i].count, "grid index out of range");
    x[i] = dims_[i].coordinate(idx[i]);
  }
  return x;
}

Vec Grid::node(std::size_t flat) const {
  std::vector<int> idx(ndim());
  multi_index(flat, idx);
  return node(std::span<const int>(idx));
}

double wrap_periodic(double x, double lo, double hi) {
  const double period = hi - lo;
  double r = std::fmod(x - lo, period);
  if (r < 0.0) r += period;
  const double y = lo + r;
  return y >= hi ? lo : y;
}

Vec Grid::wrap(const Vec& x) const {
  RACBF_REQUIRE(x.size() == ndim(), "wrap: dimension mismatch");
  Vec y = x;
  for (int i = 0; i < ndim(); ++i)
    if (dims_[i].periodic) y[i] = wrap_periodic(x[i], dims_[i].lo, dims_[i].hi);
  return y;
}

bool Grid::contains(const Vec& x) const {
  if (x.size() != ndim()) return false;
  for (int i = 0; i < ndim(); ++i) {
    if (!std::isfinite(x[i])) return false;
    if (!dims_[i].periodic && (x[i] < dims_[i].lo || x[i] > dims_[i].hi)) return false;
  }
  return true;
}

Vec Grid::clamp(const Vec& x) const {
  Vec y = wrap(x);
  for (int i = 0; i < ndim(); ++i)
    if (!dims_[i].periodic) y[i] = std::min(std::max(y[i], dims_[i].lo), dims_[i].hi);
  return y;
}

}  // namespace racbf
