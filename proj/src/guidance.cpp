#include "flowlab/guidance.hpp"

#include <cmath>
#include <string>

#include "flowlab/error.hpp"
#include "flowlab/parallel.hpp"

namespace flowlab {

void GuidanceConfig::validate() const {
  if (!(w >= 0.0)) throw DomainError("guidance scale must be >= 0");
  if (n_samples < 1) throw DomainError("n_samples must be >= 1");
  grid.validate();
}

namespace {

void check_guided_label(const LabeledField& model, int y) {
  if (model.n_classes <= 0) throw DomainError("guidance needs a label-conditional model");
  if (y < 0 || y >= model.n_classes) {
    throw DomainError("label " + std::to_string(y) + " out of range for guidance");
  }
}

Vector combine(const LabeledField& model, std::span<const double> x, double t, int y, double w) {
  check_guided_label(model, y);
  if (w == 1.0) return model(x, t, y);
  const Vector uncond = model(x, t, kNullLabel);
  const Vector cond = model(x, t, y);
  Vector out(cond.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (1.0 - w) * uncond[j] + w * cond[j];
  return out;
}

Vector sde_path(const FieldFunction& velocity, const FieldFunction& score,
                const DiffusionCoefficient& sigma, const TimeGrid& grid, std::size_t dim,
                std::uint64_t seed, std::size_t index) {
  Rng rng(seed, index);
  Vector x(dim);
  rng.fill_normal(x);
  const double h = grid.step();
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const double t = grid.time(k);
    const double sigma_t = sigma(t);
    if (k + 1 == grid.n_steps || sigma_t == 0.0) {
      euler_step(velocity, x, t, h);
      continue;
    }
    const Vector u = velocity(x, t);
    const Vector s = score(x, t);
    const double half_var = 0.5 * sigma_t * sigma_t;
    const double noise_scale = std::sqrt(h) * sigma_t;
    for (std::size_t j = 0; j < dim; ++j) {
      x[j] += h * (u[j] + half_var * s[j]) + noise_scale * rng.normal();
    }
    for (double v : x) {
      if (!std::isfinite(v)) throw SimulationError("non-finite SDE state", grid.time(k + 1), x);
    }
  }
  return x;
}

}  // namespace

Vector guided_velocity(const LabeledField& model, std::span<const double> x, double t, int y,
                       double w) {
  return combine(model, x, t, y, w);
}

Vector guided_score(const LabeledField& model, std::span<const double> x, double t, int y,
                    double w) {
  return combine(model, x, t, y, w);
}

std::vector<Vector> sample_guided_ode(const LabeledField& model, int y, const GuidanceConfig& config) {
  config.validate();
  check_guided_label(model, y);
  BatchSimulation sim;
  sim.integrator = Integrator::kEuler;
  sim.field = [&model, y, w = config.w](std::span<const double> x, double t) {
    return guided_velocity(model, x, t, y, w);
  };
  sim.grid = config.grid;
  sim.dim = model.dim;
  return simulate_batch(sim, config.n_samples, config.seed);
}

std::vector<Vector> sample_guided_sde(const LabeledField& velocity,
                                      const std::optional<LabeledField>& score,
                                      const GaussianPath& path, int y, const GuidanceConfig& config) {
  config.validate();
  check_guided_label(velocity, y);
  const double w = config.w;
  const FieldFunction guided_u = [&velocity, y, w](std::span<const double> x, double t) {
    return guided_velocity(velocity, x, t, y, w);
  };
  FieldFunction guided_s;
  if (score) {
    check_guided_label(*score, y);
    guided_s = [&score, y, w](std::span<const double> x, double t) {
      return guided_score(*score, x, t, y, w);
    };
  } else {
    // The conversion is affine in u with coefficients independent of y, so
    // converting the guided velocity equals guiding the converted scores.
    guided_s = [&guided_u, &path](std::span<const double> x, double t) {
      return velocity_to_score(path, x, t, guided_u(x, t));
    };
  }
  return sample_sde(guided_u, guided_s, config.sigma, config.grid, velocity.dim, config.n_samples,
                    config.seed);
}

std::vector<Vector> sample_sde(const FieldFunction& velocity, const FieldFunction& score,
                               const DiffusionCoefficient& sigma, const TimeGrid& grid,
                               std::size_t dim, std::size_t n_samples, std::uint64_t seed) {
  grid.validate();
  std::vector<Vector> out(n_samples);
  parallel_for(n_samples, [&](std::size_t i) {
    out[i] = sde_path(velocity, score, sigma, grid, dim, seed, i);
  });
  return out;
}

std::vector<Vector> sample_sde_serial(const FieldFunction& velocity, const FieldFunction& score,
                                      const DiffusionCoefficient& sigma, const TimeGrid& grid,
                                      std::size_t dim, std::size_t n_samples, std::uint64_t seed) {
  grid.validate();
  std::vector<Vector> out(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    out[i] = sde_path(velocity, score, sigma, grid, dim, seed, i);
  }
  return out;
}

}  // namespace flowlab
