#pragma once

#include <stdexcept>
#include <string>

namespace nco {

// Error taxonomy shared across the toolkit. All errors carry a message that
// names the violated condition; callers catch by category.

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Infeasible action, empty feasible set, fully masked softmax row.
struct FeasibilityError : std::runtime_error {
  explicit FeasibilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad arguments: out-of-range sizes, invalid hyperparameters.
struct ParameterError : std::runtime_error {
  explicit ParameterError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files (TSPLib/CVRPLib, config, checkpoint).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Semantically invalid data (e.g. a demand exceeding vehicle capacity).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// API contract violations: incomplete solutions, stale tapes, wrong phase.
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nco
