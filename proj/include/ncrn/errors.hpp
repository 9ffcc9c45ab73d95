#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ncrn {

/// Configuration rejected before any work started.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed data structure: unresolved ids, bad exponents, duplicate names.
struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An operation's precondition was violated by the caller.
struct ContractViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The integrator gave up; carries the last accepted state and time.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double t, std::vector<double> state)
      : std::runtime_error(what), last_time(t), last_state(std::move(state)) {}
  double last_time = 0.0;
  std::vector<double> last_state;
};

/// State exceeded the overflow guard, i.e. the trajectory is exploding.
struct DivergenceError : SolverError {
  using SolverError::SolverError;
};

/// A concentration fell below the negative-tolerance floor.
struct NegativeConcentrationError : SolverError {
  NegativeConcentrationError(const std::string& what, double t,
                             std::vector<double> state, std::string species_name)
      : SolverError(what, t, std::move(state)), species(std::move(species_name)) {}
  std::string species;
};

}  // namespace ncrn
