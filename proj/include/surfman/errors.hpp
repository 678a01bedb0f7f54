#pragma once

#include <stdexcept>
#include <string>

namespace surfman {

// Requested pose lies outside the mechanism workspace (tilt envelope,
// height range, or joint limits). The message names the violated constraint.
class WorkspaceError : public std::runtime_error {
public:
  explicit WorkspaceError(const std::string& what) : std::runtime_error(what) {}
};

// Forward kinematics failed to converge (leg near a fold-flat configuration).
class SingularityError : public std::runtime_error {
public:
  explicit SingularityError(const std::string& what) : std::runtime_error(what) {}
};

// Bad scenario/configuration input. Carries enough context to name the
// offending file, line, or field.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Simulation-level failure: timestep too large, NaN state, step timeout.
class SimulationError : public std::runtime_error {
public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace surfman
