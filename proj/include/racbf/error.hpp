#pragma once

#include <stdexcept>
#include <string>

namespace racbf {

// Precondition broken by the caller (dimension mismatch, out-of-range index...).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// State lies outside the grid domain of a value function.
struct OutOfDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Query time earlier than the stored horizon of a non-converged value function.
struct HorizonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solver produced a non-finite value.
struct InstabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Corrupt or unsupported artifact file.
struct FormatError : std::runtime_error {
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset(offset) {}
  std::size_t offset;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define RACBF_REQUIRE(cond, msg)                                      \
  do {                                                                \
    if (!(cond)) throw ::racbf::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace racbf
