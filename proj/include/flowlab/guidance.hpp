#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flowlab/dynamics.hpp"
#include "flowlab/field.hpp"
#include "flowlab/paths.hpp"

namespace flowlab {

struct GuidanceConfig {
  double w = 3.0;
  DiffusionCoefficient sigma;
  TimeGrid grid;
  std::size_t n_samples = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// (1 - w) u(x|null) + w u(x|y). Returns the conditional pass unchanged at w = 1.
Vector guided_velocity(const LabeledField& model, std::span<const double> x, double t, int y,
                       double w);

/// (1 - w) s(x|null) + w s(x|y). Returns the conditional pass unchanged at w = 1.
Vector guided_score(const LabeledField& model, std::span<const double> x, double t, int y,
                    double w);

/// X_0 ~ N(0, I), Euler over the guided velocity. Sample i uses Rng(seed, i).
std::vector<Vector> sample_guided_ode(const LabeledField& model, int y, const GuidanceConfig& config);

/// Euler-Maruyama on dX = [u~ + (sigma^2 / 2) s~] dt + sigma dW. Without a
/// score model the score is converted from the guided velocity. The last grid
/// step is a deterministic Euler step on u~ alone, which sidesteps the
/// vanishing conversion denominator at t = 1. With sigma = 0 the output equals
/// sample_guided_ode bit for bit.
std::vector<Vector> sample_guided_sde(const LabeledField& velocity,
                                      const std::optional<LabeledField>& score,
                                      const GaussianPath& path, int y, const GuidanceConfig& config);

/// Unguided sampler with the same stepping rule as sample_guided_sde; `score`
/// is only evaluated when sigma_t > 0.
std::vector<Vector> sample_sde(const FieldFunction& velocity, const FieldFunction& score,
                               const DiffusionCoefficient& sigma, const TimeGrid& grid,
                               std::size_t dim, std::size_t n_samples, std::uint64_t seed);
std::vector<Vector> sample_sde_serial(const FieldFunction& velocity, const FieldFunction& score,
                                      const DiffusionCoefficient& sigma, const TimeGrid& grid,
                                      std::size_t dim, std::size_t n_samples, std::uint64_t seed);

}  // namespace flowlab
