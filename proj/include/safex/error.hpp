#pragma once

#include <stdexcept>
#include <string>

namespace safex {

/// Invalid user-supplied configuration or arguments outside an operation's domain.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure broke down (non-PD Gram matrix, NaN, non-convergence).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planner preconditions violated, e.g. the start point lies inside an obstacle.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace safex
