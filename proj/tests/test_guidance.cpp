#include <cmath>

#include "doctest.h"
#include "flowlab/error.hpp"
#include "flowlab/guidance.hpp"
#include "flowlab/net.hpp"
#include "flowlab/oracle.hpp"

using namespace flowlab;

namespace {

// Constant field: uncond -> a, class y -> b[y].
LabeledField constant_model(double a, std::vector<double> b) {
  const int k = static_cast<int>(b.size());
  return LabeledField{[a, b](std::span<const double>, double, Label y) {
                        return Vector{y ? b[static_cast<std::size_t>(*y)] : a};
                      },
                      k, 1};
}

// Per-class marginal fields of a two-point labeled dataset; the null label
// sees both points.
LabeledField oracle_model(const GaussianPath& path, const Dataset& data) {
  return LabeledField{[path, data](std::span<const double> x, double t, Label y) {
                        return y ? marginal_vector_field(path, data.with_label(*y), x, t)
                                 : marginal_vector_field(path, data, x, t);
                      },
                      data.n_classes(), data.dim};
}

}  // namespace

TEST_CASE("guided combinations") {
  auto m = constant_model(1.0, {3.0});
  CHECK(guided_velocity(m, Vector{0.0}, 0.5, 0, 2.0)[0] == 5.0);
  CHECK(guided_velocity(m, Vector{0.0}, 0.5, 0, 1.0)[0] == 3.0);
  CHECK(guided_velocity(m, Vector{0.0}, 0.5, 0, 0.0)[0] == 1.0);
  auto s = constant_model(-2.0, {0.0});
  CHECK(guided_score(s, Vector{0.0}, 0.5, 0, 3.0)[0] == 4.0);
  CHECK(guided_score(s, Vector{0.0}, 0.5, 0, 1.0)[0] == 0.0);
  CHECK(guided_score(s, Vector{0.0}, 0.5, 0, 0.0)[0] == -2.0);

  CHECK_THROWS_AS(guided_velocity(constant_model(1.0, {}), Vector{0.0}, 0.5, 0, 2.0), DomainError);
  CHECK_THROWS_AS(guided_velocity(m, Vector{0.0}, 0.5, 1, 2.0), DomainError);
}

TEST_CASE("w = 1 equals the conditional network") {
  MlpSpec spec;
  spec.hidden = {8, 8};
  spec.n_classes = 2;
  auto p = mlp_init(spec, 3);
  auto model = as_labeled_field(p);
  const Vector x{0.2, -0.3};
  CHECK(guided_velocity(model, x, 0.4, 1, 1.0) == forward(p, x, 0.4, 1));
  CHECK(guided_velocity(model, x, 0.4, 1, 0.0) == forward(p, x, 0.4, kNullLabel));

  GuidanceConfig cfg;
  cfg.w = 1.0;
  cfg.n_samples = 64;
  cfg.grid = {20, 0.0, 1.0};
  cfg.seed = 5;
  auto guided = sample_guided_ode(model, 1, cfg);
  BatchSimulation sim;
  sim.field = as_field(p, 1);
  sim.grid = cfg.grid;
  sim.dim = 2;
  CHECK(guided == simulate_batch(sim, 64, 5));
}

TEST_CASE("sde sampler with sigma = 0 equals the ode sampler") {
  MlpSpec spec;
  spec.hidden = {8, 8};
  spec.n_classes = 2;
  auto model = as_labeled_field(mlp_init(spec, 4));
  const GaussianPath path{NoiseSchedule{}, 2};
  GuidanceConfig cfg;
  cfg.w = 2.5;
  cfg.n_samples = 50;
  cfg.grid = {30, 0.0, 1.0};
  cfg.seed = 9;
  CHECK(sample_guided_sde(model, std::nullopt, path, 0, cfg) == sample_guided_ode(model, 0, cfg));
}

TEST_CASE("sde sampler reaches the data with exact fields") {
  const GaussianPath path{NoiseSchedule{}, 1};
  const Dataset one = Dataset::uniform({{1.5}}, {0});
  GuidanceConfig cfg;
  cfg.w = 1.0;
  cfg.sigma = DiffusionCoefficient::constant(0.8);
  cfg.n_samples = 4096;
  cfg.grid = {200, 0.0, 1.0};
  auto xs = sample_guided_sde(oracle_model(path, one), std::nullopt, path, 0, cfg);
  double m = 0;
  for (auto& x : xs) m += x[0];
  CHECK(std::abs(m / xs.size() - 1.5) < 0.05);

  // Per-class marginals of a two-point labeled set are single points.
  const Dataset two = Dataset::uniform({{-1.0}, {2.0}}, {0, 1});
  cfg.sigma = DiffusionCoefficient::zero();
  cfg.n_samples = 16;
  for (int y : {0, 1}) {
    for (auto& x : sample_guided_ode(oracle_model(path, two), y, cfg)) {
      CHECK(x[0] == doctest::Approx(two.points[static_cast<std::size_t>(y)][0]).epsilon(1e-9));
    }
  }
}

TEST_CASE("unguided sde sampler is thread-count independent") {
  const GaussianPath path{NoiseSchedule{}, 2};
  const Dataset data = Dataset::uniform({{-1.0, 0.0}, {1.0, 1.0}});
  const auto u = marginal_field_function(path, data);
  const auto s = marginal_score_function(path, data);
  const TimeGrid grid{40, 0.0, 1.0};
  const auto sigma = DiffusionCoefficient::constant(0.5);
  CHECK(sample_sde(u, s, sigma, grid, 2, 77, 3) == sample_sde_serial(u, s, sigma, grid, 2, 77, 3));
}
