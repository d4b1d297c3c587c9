#include "flowlab/dynamics.hpp"

#include <cmath>
#include <string>

#include "flowlab/error.hpp"
#include "flowlab/parallel.hpp"

namespace flowlab {

void TimeGrid::validate() const {
  if (n_steps == 0) throw DomainError("time grid needs at least one step");
  if (!(end > start)) throw DomainError("time grid needs start < end");
}

void Trajectory::check_invariants() const {
  if (times.size() != states.size()) {
    throw SimulationError("trajectory times/states length mismatch", 0.0, {});
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1])) {
      throw SimulationError("trajectory times not increasing", times[k], states[k]);
    }
    for (double v : states[k]) {
      if (!std::isfinite(v)) throw SimulationError("non-finite trajectory state", times[k], states[k]);
    }
  }
}

DiffusionCoefficient DiffusionCoefficient::constant(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw DomainError("diffusion coefficient must be finite and non-negative");
  }
  return {Kind::kConstant, sigma};
}

namespace {

Vector evaluate(const FieldFunction& field, const Vector& x, double t) {
  Vector u = field(x, t);
  if (u.size() != x.size()) throw SimulationError("field returned wrong dimension", t, x);
  for (double v : u) {
    if (!std::isfinite(v)) throw SimulationError("non-finite field value", t, x);
  }
  return u;
}

void check_state(const Vector& x, double t) {
  for (double v : x) {
    if (!std::isfinite(v)) throw SimulationError("non-finite state", t, x);
  }
}

class Recorder {
 public:
  Recorder(Record mode, const TimeGrid& grid) : mode_(mode) {
    if (mode_ == Record::kAll) {
      traj_.times.reserve(grid.n_steps + 1);
      traj_.states.reserve(grid.n_steps + 1);
    }
  }

  void push(double t, const Vector& x) {
    if (mode_ == Record::kAll) {
      traj_.times.push_back(t);
      traj_.states.push_back(x);
    }
  }

  Trajectory finish(double t, Vector x) && {
    if (mode_ == Record::kTerminal) {
      traj_.times = {t};
      traj_.states = {std::move(x)};
    }
    return std::move(traj_);
  }

 private:
  Record mode_;
  Trajectory traj_;
};

template <class Step>
Trajectory integrate(std::span<const double> x0, const TimeGrid& grid, Record record, Step&& step) {
  grid.validate();
  Vector x(x0.begin(), x0.end());
  check_state(x, grid.start);
  Recorder rec(record, grid);
  rec.push(grid.time(0), x);
  const double h = grid.step();
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    step(x, grid.time(k), h);
    check_state(x, grid.time(k + 1));
    rec.push(grid.time(k + 1), x);
  }
  return std::move(rec).finish(grid.end, std::move(x));
}

}  // namespace

Trajectory brownian_path(Rng& rng, const TimeGrid& grid, std::size_t dim, Record record) {
  const Vector origin(dim, 0.0);
  return integrate(origin, grid, record, [&](Vector& w, double, double h) {
    const double scale = std::sqrt(h);
    for (double& v : w) v += scale * rng.normal();
  });
}

void euler_step(const FieldFunction& field, Vector& x, double t, double h) {
  const Vector u = evaluate(field, x, t);
  for (std::size_t j = 0; j < x.size(); ++j) x[j] += h * u[j];
}

void heun_step(const FieldFunction& field, Vector& x, double t, double h) {
  const Vector u0 = evaluate(field, x, t);
  Vector guess(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) guess[j] = x[j] + h * u0[j];
  const Vector u1 = evaluate(field, guess, t + h);
  for (std::size_t j = 0; j < x.size(); ++j) x[j] += 0.5 * h * (u0[j] + u1[j]);
}

void em_step(const FieldFunction& field, double sigma_t, Vector& x, double t, double h, Rng& rng) {
  const Vector u = evaluate(field, x, t);
  if (sigma_t == 0.0) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += h * u[j];
    return;
  }
  const double noise_scale = std::sqrt(h) * sigma_t;
  for (std::size_t j = 0; j < x.size(); ++j) x[j] += h * u[j] + noise_scale * rng.normal();
}

Trajectory simulate_euler(const FieldFunction& field, std::span<const double> x0,
                          const TimeGrid& grid, Record record) {
  return integrate(x0, grid, record,
                   [&](Vector& x, double t, double h) { euler_step(field, x, t, h); });
}

Trajectory simulate_heun(const FieldFunction& field, std::span<const double> x0,
                         const TimeGrid& grid, Record record) {
  return integrate(x0, grid, record,
                   [&](Vector& x, double t, double h) { heun_step(field, x, t, h); });
}

Trajectory simulate_em(const FieldFunction& field, const DiffusionCoefficient& sigma,
                       std::span<const double> x0, const TimeGrid& grid, Rng& rng, Record record) {
  return integrate(x0, grid, record,
                   [&](Vector& x, double t, double h) { em_step(field, sigma(t), x, t, h, rng); });
}

Trajectory simulate_langevin(const FieldFunction& score, double sigma, std::span<const double> x0,
                             const TimeGrid& grid, Rng& rng, Record record) {
  if (!(sigma > 0.0)) throw DomainError("Langevin dynamics requires sigma > 0");
  const double half_var = 0.5 * sigma * sigma;
  const FieldFunction drift = [&score, half_var](std::span<const double> x, double t) {
    Vector s = score(x, t);
    for (double& v : s) v *= half_var;
    return s;
  };
  return simulate_em(drift, DiffusionCoefficient::constant(sigma), x0, grid, rng, record);
}

namespace {

Vector simulate_one(const BatchSimulation& sim, std::uint64_t seed, std::size_t index) {
  Rng rng(seed, index);
  Vector x0;
  if (sim.fixed_start) {
    x0 = *sim.fixed_start;
  } else {
    x0.resize(sim.dim);
    rng.fill_normal(x0);
  }
  switch (sim.integrator) {
    case Integrator::kEuler:
      return simulate_euler(sim.field, x0, sim.grid, Record::kTerminal).terminal();
    case Integrator::kHeun:
      return simulate_heun(sim.field, x0, sim.grid, Record::kTerminal).terminal();
    case Integrator::kEulerMaruyama:
      return simulate_em(sim.field, sim.sigma, x0, sim.grid, rng, Record::kTerminal).terminal();
  }
  throw DomainError("unknown integrator");
}

}  // namespace

std::vector<Vector> simulate_batch_serial(const BatchSimulation& sim, std::size_t n_paths,
                                          std::uint64_t seed) {
  std::vector<Vector> out(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) out[i] = simulate_one(sim, seed, i);
  return out;
}

std::vector<Vector> simulate_batch(const BatchSimulation& sim, std::size_t n_paths,
                                   std::uint64_t seed) {
  std::vector<Vector> out(n_paths);
  parallel_for(n_paths, [&](std::size_t i) { out[i] = simulate_one(sim, seed, i); });
  return out;
}

}  // namespace flowlab
