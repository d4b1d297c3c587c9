#include <cmath>

#include "doctest.h"
#include "flowlab/dynamics.hpp"
#include "flowlab/error.hpp"
#include "flowlab/parallel.hpp"

using namespace flowlab;

namespace {
const FieldFunction kZero = [](std::span<const double> x, double) { return Vector(x.size(), 0.0); };
const FieldFunction kDecay = [](std::span<const double> x, double) { return Vector{-x[0]}; };
}  // namespace

TEST_CASE("time grid") {
  TimeGrid g{3, 0.0, 1.0};
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(3) == 1.0);
  CHECK_THROWS_AS((TimeGrid{0, 0.0, 1.0}.validate()), DomainError);
}

TEST_CASE("brownian path") {
  Rng rng(1);
  auto w = brownian_path(rng, {10, 0.0, 1.0}, 3);
  CHECK(w.states.front() == Vector{0.0, 0.0, 0.0});
  CHECK(w.states.size() == 11);

  // Increment variance and independence over 1e5 paths.
  const int n = 100000;
  double s1 = 0, s2 = 0, s12 = 0;
  for (int i = 0; i < n; ++i) {
    Rng r(2, static_cast<std::uint64_t>(i));
    auto tr = brownian_path(r, {2, 0.0, 0.02}, 1);
    const double d1 = tr.states[1][0] - tr.states[0][0];
    const double d2 = tr.states[2][0] - tr.states[1][0];
    s1 += d1 * d1;
    s2 += d2 * d2;
    s12 += d1 * d2;
  }
  CHECK(s1 / n >= 0.0098);
  CHECK(s1 / n <= 0.0102);
  CHECK(std::abs(s12 / std::sqrt(s1 * s2)) < 0.01);
}

TEST_CASE("euler") {
  const Vector x0{1.25};
  auto c = simulate_euler(kZero, x0, {7, 0.0, 1.0});
  for (const auto& s : c.states) CHECK(s == x0);
  CHECK(simulate_euler(kDecay, Vector{1.0}, {2, 0.0, 1.0}).terminal()[0] == 0.25);
  CHECK(simulate_euler(kDecay, Vector{1.0}, {100000, 0.0, 1.0}, Record::kTerminal).terminal()[0] ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-5));

  const FieldFunction bad = [](std::span<const double>, double t) {
    return Vector{t > 0.5 ? std::nan("") : 0.0};
  };
  try {
    simulate_euler(bad, Vector{0.0}, {10, 0.0, 1.0});
    FAIL("expected SimulationError");
  } catch (const SimulationError& e) {
    CHECK(e.time() > 0.5);
    CHECK(e.state().size() == 1);
  }
}

TEST_CASE("heun") {
  CHECK(simulate_heun(kZero, Vector{3.0}, {5, 0.0, 1.0}).terminal()[0] == 3.0);
  CHECK(simulate_heun(kDecay, Vector{1.0}, {1, 0.0, 1.0}).terminal()[0] == 0.5);
  const double e1 = std::abs(simulate_heun(kDecay, Vector{1.0}, {20, 0.0, 1.0}).terminal()[0] - std::exp(-1.0));
  const double e2 = std::abs(simulate_heun(kDecay, Vector{1.0}, {40, 0.0, 1.0}).terminal()[0] - std::exp(-1.0));
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("euler-maruyama") {
  Rng rng(3);
  const TimeGrid grid{50, 0.0, 1.0};
  auto em = simulate_em(kDecay, DiffusionCoefficient::zero(), Vector{1.0}, grid, rng);
  auto eu = simulate_euler(kDecay, Vector{1.0}, grid);
  CHECK(em.states == eu.states);

  // Ornstein-Uhlenbeck stationary variance sigma^2 / (2 theta) = 2.
  BatchSimulation sim;
  sim.integrator = Integrator::kEulerMaruyama;
  sim.field = [](std::span<const double> x, double) { return Vector{-0.25 * x[0]}; };
  sim.sigma = DiffusionCoefficient::constant(1.0);
  sim.grid = {2000, 0.0, 20.0};
  sim.dim = 1;
  sim.fixed_start = Vector{0.0};
  auto xs = simulate_batch(sim, 10000, 5);
  double m = 0, v = 0;
  for (auto& x : xs) m += x[0];
  m /= xs.size();
  for (auto& x : xs) v += (x[0] - m) * (x[0] - m);
  v /= xs.size();
  CHECK(v == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("langevin keeps the target law") {
  const FieldFunction score = [](std::span<const double> x, double) { return Vector{-x[0]}; };
  const int n = 4000;
  double v = 0;
  for (int i = 0; i < n; ++i) {
    Rng rng(8, static_cast<std::uint64_t>(i));
    auto tr = simulate_langevin(score, 1.0, Vector{0.0}, {1000, 0.0, 10.0}, rng, Record::kTerminal);
    v += tr.terminal()[0] * tr.terminal()[0];
  }
  CHECK(v / n == doctest::Approx(1.0).epsilon(0.07));
  Rng rng(0);
  CHECK_THROWS_AS(simulate_langevin(score, 0.0, Vector{0.0}, {10, 0.0, 1.0}, rng), DomainError);
}

TEST_CASE("batch simulation is thread-count independent") {
  BatchSimulation sim;
  sim.integrator = Integrator::kEulerMaruyama;
  sim.field = [](std::span<const double> x, double t) { return Vector{std::sin(x[0]) - t, -x[1]}; };
  sim.sigma = DiffusionCoefficient::constant(0.7);
  sim.grid = {25, 0.0, 1.0};
  sim.dim = 2;
  const auto serial = simulate_batch_serial(sim, 97, 21);
  for (int threads : {1, 2, 4, 0}) {
    set_thread_limit(threads);
    CHECK(simulate_batch(sim, 97, 21) == serial);
  }
  set_thread_limit(0);

  sim.integrator = Integrator::kHeun;
  CHECK(simulate_batch(sim, 33, 4) == simulate_batch_serial(sim, 33, 4));
}
