#pragma once

#include <stdexcept>
#include <string>

namespace bmqt {

/// Input outside the domain of an operation (non-physical spectrum, bad orders, ...).
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solve did not reach the requested tolerance. Carries the last residual.
class convergence_error : public std::runtime_error {
 public:
  convergence_error(const std::string& what, double residual)
      : std::runtime_error(what), last_residual(residual) {}
  double last_residual;
};

/// Discrete feasibility residual too large (quadrature too coarse for the request).
class constraint_violation_error : public std::runtime_error {
 public:
  constraint_violation_error(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

/// Configuration document rejected (parse error, unknown key, violated hypothesis).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Unrecoverable failure during time stepping (positivity loss, NaN, retries exhausted).
class simulation_error : public std::runtime_error {
 public:
  explicit simulation_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bmqt
