#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flowlab/field.hpp"
#include "flowlab/rng.hpp"

namespace flowlab {

/// Uniform grid start + k h, k = 0..n_steps.
struct TimeGrid {
  std::size_t n_steps = 100;
  double start = 0.0;
  double end = 1.0;

  double step() const noexcept { return (end - start) / static_cast<double>(n_steps); }
  double time(std::size_t k) const noexcept {
    return k == n_steps ? end : start + static_cast<double>(k) * step();
  }
  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;

  const Vector& terminal() const { return states.back(); }
  /// Throws SimulationError if times are not increasing or a state is non-finite.
  void check_invariants() const;
};

/// Analysis mode keeps every state; sampling mode keeps only the terminal one.
enum class Record { kAll, kTerminal };

/// sigma_t >= 0. `zero` makes an SDE a flow.
struct DiffusionCoefficient {
  enum class Kind { kZero, kConstant };
  Kind kind = Kind::kZero;
  double value = 0.0;

  static DiffusionCoefficient zero() noexcept { return {}; }
  static DiffusionCoefficient constant(double sigma);

  double operator()(double /*t*/) const noexcept { return kind == Kind::kZero ? 0.0 : value; }
};

/// W_{t+h} = W_t + sqrt(h) eps, W_start = 0.
Trajectory brownian_path(Rng& rng, const TimeGrid& grid, std::size_t dim,
                         Record record = Record::kAll);

// Single steps. Each writes the new state into `x` and throws SimulationError
// on non-finite field values.
void euler_step(const FieldFunction& field, Vector& x, double t, double h);
void heun_step(const FieldFunction& field, Vector& x, double t, double h);
void em_step(const FieldFunction& field, double sigma_t, Vector& x, double t, double h, Rng& rng);

/// X_{t+h} = X_t + h u_t(X_t).
Trajectory simulate_euler(const FieldFunction& field, std::span<const double> x0,
                          const TimeGrid& grid, Record record = Record::kAll);

/// Heun predictor-corrector: second order.
Trajectory simulate_heun(const FieldFunction& field, std::span<const double> x0,
                         const TimeGrid& grid, Record record = Record::kAll);

/// X_{t+h} = X_t + h u_t(X_t) + sqrt(h) sigma_t eps. With sigma = 0 no noise is
/// drawn and the result equals simulate_euler bit for bit.
Trajectory simulate_em(const FieldFunction& field, const DiffusionCoefficient& sigma,
                       std::span<const double> x0, const TimeGrid& grid, Rng& rng,
                       Record record = Record::kAll);

/// dX = (sigma^2 / 2) score(X) dt + sigma dW.
Trajectory simulate_langevin(const FieldFunction& score, double sigma, std::span<const double> x0,
                             const TimeGrid& grid, Rng& rng, Record record = Record::kAll);

enum class Integrator { kEuler, kHeun, kEulerMaruyama };

/// A batch of independent paths. Path i uses Rng(seed, i) for its start point
/// (when `fixed_start` is empty, X_0 ~ N(0, I)) and its noise.
struct BatchSimulation {
  Integrator integrator = Integrator::kEuler;
  FieldFunction field;
  DiffusionCoefficient sigma;
  TimeGrid grid;
  std::size_t dim = 1;
  std::optional<Vector> fixed_start;
};

/// Terminal states of n paths. OpenMP over paths; identical to the serial
/// reference for any thread count.
std::vector<Vector> simulate_batch(const BatchSimulation& sim, std::size_t n_paths,
                                   std::uint64_t seed);
std::vector<Vector> simulate_batch_serial(const BatchSimulation& sim, std::size_t n_paths,
                                          std::uint64_t seed);

}  // namespace flowlab
