#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace msllg {

/// Bad inputs: malformed configs, precondition violations, unusable setups.
/// The CLI maps this family to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Iterative solver failed to reach its tolerance. Carries the residual
/// history of the failed solve. CLI exit code 3.
struct SolverError : std::runtime_error {
    std::vector<double> residual_history;
    SolverError(const std::string& msg, std::vector<double> history = {})
        : std::runtime_error(msg), residual_history(std::move(history)) {}
};

/// Right-hand side incompatible with a singular (pure-Neumann/periodic) system.
struct CompatibilityError : SolverError {
    using SolverError::SolverError;
};

}  // namespace msllg
