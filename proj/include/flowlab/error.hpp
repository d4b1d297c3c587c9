#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowlab {

/// Argument outside the documented domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A formula would divide by a vanishing schedule quantity (beta_t, alpha_t,
/// or the score/velocity conversion denominator).
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An integrator produced or consumed a non-finite value.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double t, std::vector<double> x)
      : std::runtime_error(what), t_(t), x_(std::move(x)) {}

  double time() const noexcept { return t_; }
  const std::vector<double>& state() const noexcept { return x_; }

 private:
  double t_;
  std::vector<double> x_;
};

/// Training diverged; carries the optimizer step at which it happened.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Invalid run configuration; names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace flowlab
