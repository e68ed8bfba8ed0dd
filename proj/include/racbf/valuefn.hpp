#pragma once

#include "racbf/grid.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace racbf {

/// Time-indexed stack of value slices V(., t_k) on a rectilinear grid.
///
/// times[0] == 0 and times are strictly decreasing. A converged grid extends
/// its earliest slice to every earlier query time with zero time derivative;
/// a non-converged grid refuses such queries.
struct ValueGrid {
  Grid grid;
  std::vector<double> times;
  std::vector<std::vector<double>> slices;
  bool converged = false;
  nlohmann::json provenance = nlohmann::json::object();

  double horizon() const { return times.empty() ? 0.0 : -times.back(); }
  /// Throws ContractViolation when the invariants above do not hold.
  void validate() const;
};

/// Value, spatial gradient and time derivative at one (x, t).
struct ValueSample {
  double value = 0.0;
  Vec gradient;
  double time_derivative = 0.0;
};

/// Multilinear in space, linear in time. Throws OutOfDomain for states outside
/// the grid and HorizonError for times before the horizon of a non-converged grid.
double value_at(const ValueGrid& vg, const Vec& x, double t);

/// Node values at time t, blended exactly as value_at blends slices.
std::vector<double> slice_at(const ValueGrid& vg, double t);

/// Central-difference node gradients (one-sided at non-periodic edges),
/// interpolated like value_at.
Vec spatial_gradient(const ValueGrid& vg, const Vec& x, double t);

/// Difference quotient across the two slices bracketing t; 0 beyond a converged horizon.
double temporal_derivative(const ValueGrid& vg, const Vec& x, double t);

/// All three quantities in one pass.
ValueSample sample(const ValueGrid& vg, const Vec& x, double t);

/// value_at(x, t) >= 0; states outside the domain are reported as not members.
bool membership(const ValueGrid& vg, const Vec& x, double t);

// RAVG1 artifact (little-endian):
//   "RAVG" | u32 version | u32 ndim | ndim x (f64 lo, f64 hi, u32 count, u8 periodic)
//   | u32 nslices | nslices x f64 time | nslices x nodes x f64 value (row-major,
//   last dim fastest) | u32 provenance length | provenance UTF-8 JSON | u32 CRC32
inline constexpr std::uint32_t kRavgVersion = 1;

void save(const ValueGrid& vg, const std::string& path);
/// Throws FormatError (with byte offset) on bad magic, version, size or CRC.
ValueGrid load(const std::string& path);

std::vector<unsigned char> serialize(const ValueGrid& vg);
ValueGrid deserialize(const std::vector<unsigned char>& bytes);

}  // namespace racbf
