#pragma once

// Independent CFL step: max |f_i| sampled at every grid node over the
// vertices of U and D (affine in u and d, so vertices attain the max).

#include "brute_hamiltonian.hpp"
#include "racbf/grid.hpp"

namespace oracle {

inline double sampled_cfl_dt(const racbf::SystemModel& m, const racbf::Grid& grid, double safety) {
  Vec speed = Vec::Zero(m.state_dim);
  for (std::size_t k = 0; k < grid.size(); ++k) speed = speed.cwiseMax(brute_speed(m, grid.node(k), 2));
  double rate = 0.0;
  for (int i = 0; i < grid.ndim(); ++i) rate += speed[i] / grid.dim(i).spacing();
  return safety / rate;
}

}  // namespace oracle
