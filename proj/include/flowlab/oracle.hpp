#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "flowlab/field.hpp"
#include "flowlab/paths.hpp"
#include "flowlab/rng.hpp"

namespace flowlab {

/// Empirical data distribution: sum_i w_i delta(z_i).
struct Dataset {
  std::size_t dim = 0;
  std::vector<Vector> points;
  std::vector<int> labels;     // empty when unlabeled
  std::vector<double> weights; // probability vector

  static Dataset uniform(std::vector<Vector> points, std::vector<int> labels = {});

  std::size_t size() const noexcept { return points.size(); }
  bool labeled() const noexcept { return !labels.empty(); }
  /// Largest label + 1, or 0 when unlabeled.
  int n_classes() const noexcept;
  /// Points carrying label y, renormalized.
  Dataset with_label(int y) const;

  /// Throws DomainError if shapes, labels, or weights are inconsistent.
  void validate() const;
};

/// Posterior weights w_i N(x; alpha z_i, beta^2 I) / p_t(x), by log-sum-exp.
std::vector<double> posterior_weights(const GaussianPath& path, const Dataset& data,
                                      std::span<const double> x, double t);

double log_marginal_density(const GaussianPath& path, const Dataset& data,
                            std::span<const double> x, double t);
double marginal_density(const GaussianPath& path, const Dataset& data, std::span<const double> x,
                        double t);
Vector marginal_vector_field(const GaussianPath& path, const Dataset& data,
                             std::span<const double> x, double t);
Vector marginal_score(const GaussianPath& path, const Dataset& data, std::span<const double> x,
                      double t);

/// Adapters binding a path and dataset into field objects.
DensityFunction marginal_density_function(GaussianPath path, Dataset data);
FieldFunction marginal_field_function(GaussianPath path, Dataset data);
FieldFunction marginal_score_function(GaussianPath path, Dataset data);
/// u + (sigma^2 / 2) grad log p: follows the same marginal path under an SDE.
FieldFunction sde_extension_field(GaussianPath path, Dataset data, double sigma);

/// Finite-difference steps. When `space` is empty the per-coordinate step is
/// 1e-4 * (1 + |x_j|).
struct FdSteps {
  std::optional<double> space;
  double time = 1e-4;

  double space_step(double coordinate) const noexcept;
};

/// dp/dt + div(p u) by central differences. The time stencil must stay inside
/// `clamp`, otherwise DomainError.
double continuity_residual(const DensityFunction& density, const FieldFunction& field,
                           std::span<const double> x, double t, const FdSteps& steps = {},
                           const TimeClamp& clamp = {});

/// dp/dt + div(p u) - (sigma_t^2 / 2) Laplacian(p). Equals continuity_residual
/// exactly when sigma_t = 0.
double fokker_planck_residual(const DensityFunction& density, const FieldFunction& field,
                              const std::function<double(double)>& sigma,
                              std::span<const double> x, double t, const FdSteps& steps = {},
                              const TimeClamp& clamp = {});

struct ProbePoint {
  Vector x;
  double t;
};

/// Probes drawn from the marginal path itself: t ~ Unif[t_min, t_max],
/// z ~ data, x ~ p_t(.|z).
std::vector<ProbePoint> mass_weighted_probes(const GaussianPath& path, const Dataset& data,
                                             std::size_t n, double t_min, double t_max, Rng& rng);

struct ResidualReport {
  double max_abs_residual = 0.0;
  std::vector<ProbePoint> grid;
  std::vector<double> residuals;
  double fd_step_space = 0.0;  // 0 encodes the relative default
  double fd_step_time = 0.0;
};

/// Fokker-Planck residual at every probe (sigma == nullptr means sigma = 0,
/// i.e. the continuity equation). OpenMP over probes.
ResidualReport residual_report(const DensityFunction& density, const FieldFunction& field,
                               const std::function<double(double)>& sigma,
                               std::span<const ProbePoint> probes, const FdSteps& steps = {},
                               const TimeClamp& clamp = {});
ResidualReport residual_report_serial(const DensityFunction& density, const FieldFunction& field,
                                      const std::function<double(double)>& sigma,
                                      std::span<const ProbePoint> probes,
                                      const FdSteps& steps = {}, const TimeClamp& clamp = {});

/// Tensor-product trapezoidal quadrature for the flow-matching loss gap in d = 1.
struct LossGapQuadrature {
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t x_nodes = 2001;
  double t_min = 0.05;
  double t_max = 0.95;
  std::size_t t_nodes = 21;
};

struct LossGap {
  double fm_a, cfm_a, fm_b, cfm_b;
  double gap_a() const noexcept { return fm_a - cfm_a; }
  double gap_b() const noexcept { return fm_b - cfm_b; }
};

/// L_FM and L_CFM for two candidate fields, computed by deterministic
/// quadrature. The gap L_FM - L_CFM does not depend on the field.
/// Throws DomainError if d != 1 or the x-range leaves > 1e-8 tail mass.
LossGap loss_gap_probe(const GaussianPath& path, const Dataset& data, const FieldFunction& field_a,
                       const FieldFunction& field_b, const LossGapQuadrature& quad = {});
LossGap loss_gap_probe_serial(const GaussianPath& path, const Dataset& data,
                              const FieldFunction& field_a, const FieldFunction& field_b,
                              const LossGapQuadrature& quad = {});

}  // namespace flowlab
