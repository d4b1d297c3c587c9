#include "flowlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "flowlab/error.hpp"
#include "flowlab/parallel.hpp"

namespace flowlab {

Dataset Dataset::uniform(std::vector<Vector> points, std::vector<int> labels) {
  Dataset data;
  data.dim = points.empty() ? 0 : points.front().size();
  const double w = points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size());
  data.weights.assign(points.size(), w);
  data.points = std::move(points);
  data.labels = std::move(labels);
  data.validate();
  return data;
}

int Dataset::n_classes() const noexcept {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

Dataset Dataset::with_label(int y) const {
  if (!labeled()) throw DomainError("dataset has no labels");
  Dataset out;
  out.dim = dim;
  double total = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (labels[i] != y) continue;
    out.points.push_back(points[i]);
    out.labels.push_back(y);
    out.weights.push_back(weights[i]);
    total += weights[i];
  }
  if (out.points.empty()) throw DomainError("no points with label " + std::to_string(y));
  for (double& w : out.weights) w /= total;
  return out;
}

void Dataset::validate() const {
  if (points.empty()) throw DomainError("dataset is empty");
  if (dim == 0) throw DomainError("dataset dimension must be positive");
  for (const auto& p : points) {
    if (p.size() != dim) throw DomainError("dataset point has wrong dimension");
  }
  if (weights.size() != points.size()) throw DomainError("weights length != number of points");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("dataset weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("dataset weights must sum to 1");
  if (!labels.empty()) {
    if (labels.size() != points.size()) throw DomainError("labels length != number of points");
    for (int y : labels) {
      if (y < 0) throw DomainError("labels must be non-negative");
    }
  }
}

namespace {

struct MixtureTerms {
  double alpha;
  double beta;
  std::vector<double> log_terms;  // log w_i + log N(x; alpha z_i, beta^2 I)
  double log_total;
};

MixtureTerms mixture_terms(const GaussianPath& path, const Dataset& data,
                           std::span<const double> x, double t) {
  if (x.size() != data.dim || path.dim != data.dim) {
    throw DomainError("point, path and dataset dimensions differ");
  }
  const ScheduleValues s = path.at(t);
  if (std::abs(s.beta) <= kSingularityTolerance) {
    throw SingularityError("beta_t vanishes at t = " + std::to_string(t));
  }
  const double d = static_cast<double>(data.dim);
  const double log_norm = -d * std::log(s.beta) - 0.5 * d * std::log(2.0 * std::numbers::pi);
  const double inv_two_var = 0.5 / (s.beta * s.beta);

  MixtureTerms m{s.alpha, s.beta, std::vector<double>(data.size()), 0.0};
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.size(); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < data.dim; ++j) {
      const double r = x[j] - s.alpha * data.points[i][j];
      sq += r * r;
    }
    const double lw = data.weights[i] > 0.0 ? std::log(data.weights[i])
                                            : -std::numeric_limits<double>::infinity();
    m.log_terms[i] = lw + log_norm - sq * inv_two_var;
    peak = std::max(peak, m.log_terms[i]);
  }
  double sum = 0.0;
  for (double lt : m.log_terms) sum += std::exp(lt - peak);
  m.log_total = peak + std::log(sum);
  return m;
}

}  // namespace

std::vector<double> posterior_weights(const GaussianPath& path, const Dataset& data,
                                      std::span<const double> x, double t) {
  MixtureTerms m = mixture_terms(path, data, x, t);
  for (double& lt : m.log_terms) lt = std::exp(lt - m.log_total);
  return std::move(m.log_terms);
}

double log_marginal_density(const GaussianPath& path, const Dataset& data,
                            std::span<const double> x, double t) {
  return mixture_terms(path, data, x, t).log_total;
}

double marginal_density(const GaussianPath& path, const Dataset& data, std::span<const double> x,
                        double t) {
  return std::exp(log_marginal_density(path, data, x, t));
}

Vector marginal_vector_field(const GaussianPath& path, const Dataset& data,
                             std::span<const double> x, double t) {
  const std::vector<double> post = posterior_weights(path, data, x, t);
  Vector u(data.dim, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (post[i] == 0.0) continue;
    const Vector ui = cond_vector_field(path, x, data.points[i], t);
    for (std::size_t j = 0; j < data.dim; ++j) u[j] += post[i] * ui[j];
  }
  return u;
}

Vector marginal_score(const GaussianPath& path, const Dataset& data, std::span<const double> x,
                      double t) {
  const std::vector<double> post = posterior_weights(path, data, x, t);
  const ScheduleValues s = path.at(t);
  // sum_i pi_i (alpha z_i - x) / beta^2 = (alpha E[z|x] - x) / beta^2
  Vector mean(data.dim, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim; ++j) mean[j] += post[i] * data.points[i][j];
  }
  const double inv_var = 1.0 / (s.beta * s.beta);
  Vector score(data.dim);
  for (std::size_t j = 0; j < data.dim; ++j) score[j] = (s.alpha * mean[j] - x[j]) * inv_var;
  return score;
}

DensityFunction marginal_density_function(GaussianPath path, Dataset data) {
  return [path, data = std::move(data)](std::span<const double> x, double t) {
    return marginal_density(path, data, x, t);
  };
}

FieldFunction marginal_field_function(GaussianPath path, Dataset data) {
  return [path, data = std::move(data)](std::span<const double> x, double t) {
    return marginal_vector_field(path, data, x, t);
  };
}

FieldFunction marginal_score_function(GaussianPath path, Dataset data) {
  return [path, data = std::move(data)](std::span<const double> x, double t) {
    return marginal_score(path, data, x, t);
  };
}

FieldFunction sde_extension_field(GaussianPath path, Dataset data, double sigma) {
  const double half_var = 0.5 * sigma * sigma;
  return [path, data = std::move(data), half_var](std::span<const double> x, double t) {
    Vector u = marginal_vector_field(path, data, x, t);
    if (half_var == 0.0) return u;
    const Vector s = marginal_score(path, data, x, t);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] += half_var * s[j];
    return u;
  };
}

double FdSteps::space_step(double coordinate) const noexcept {
  return space ? *space : 1e-4 * (1.0 + std::abs(coordinate));
}

namespace {

void check_time_stencil(double t, double dt, const TimeClamp& clamp) {
  if (t - dt < clamp.lower() || t + dt > clamp.upper()) {
    throw DomainError("finite-difference stencil around t = " + std::to_string(t) +
                      " leaves [" + std::to_string(clamp.lower()) + ", " +
                      std::to_string(clamp.upper()) + "]");
  }
}

struct SpatialTerms {
  double divergence;  // div(p u)
  double laplacian;   // Laplacian(p)
};

SpatialTerms spatial_terms(const DensityFunction& density, const FieldFunction& field,
                           std::span<const double> x, double t, const FdSteps& steps,
                           bool need_laplacian) {
  Vector probe(x.begin(), x.end());
  const double p0 = need_laplacian ? density(x, t) : 0.0;
  SpatialTerms out{0.0, 0.0};
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double h = steps.space_step(x[j]);
    probe[j] = x[j] + h;
    const double p_plus = density(probe, t);
    const double flux_plus = p_plus * field(probe, t)[j];
    probe[j] = x[j] - h;
    const double p_minus = density(probe, t);
    const double flux_minus = p_minus * field(probe, t)[j];
    probe[j] = x[j];
    out.divergence += (flux_plus - flux_minus) / (2.0 * h);
    if (need_laplacian) out.laplacian += (p_plus - 2.0 * p0 + p_minus) / (h * h);
  }
  return out;
}

double time_derivative(const DensityFunction& density, std::span<const double> x, double t,
                       double dt) {
  return (density(x, t + dt) - density(x, t - dt)) / (2.0 * dt);
}

}  // namespace

double continuity_residual(const DensityFunction& density, const FieldFunction& field,
                           std::span<const double> x, double t, const FdSteps& steps,
                           const TimeClamp& clamp) {
  check_time_stencil(t, steps.time, clamp);
  const SpatialTerms spatial = spatial_terms(density, field, x, t, steps, false);
  return time_derivative(density, x, t, steps.time) + spatial.divergence;
}

double fokker_planck_residual(const DensityFunction& density, const FieldFunction& field,
                              const std::function<double(double)>& sigma,
                              std::span<const double> x, double t, const FdSteps& steps,
                              const TimeClamp& clamp) {
  const double sigma_t = sigma ? sigma(t) : 0.0;
  if (sigma_t == 0.0) return continuity_residual(density, field, x, t, steps, clamp);
  check_time_stencil(t, steps.time, clamp);
  const SpatialTerms spatial = spatial_terms(density, field, x, t, steps, true);
  return time_derivative(density, x, t, steps.time) + spatial.divergence -
         0.5 * sigma_t * sigma_t * spatial.laplacian;
}

std::vector<ProbePoint> mass_weighted_probes(const GaussianPath& path, const Dataset& data,
                                             std::size_t n, double t_min, double t_max, Rng& rng) {
  std::vector<ProbePoint> probes;
  probes.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = t_min + (t_max - t_min) * rng.uniform();
    // Weighted draw of a data index.
    double u = rng.uniform();
    std::size_t i = 0;
    while (i + 1 < data.size() && u >= data.weights[i]) {
      u -= data.weights[i];
      ++i;
    }
    probes.push_back({cond_sample(path, data.points[i], t, rng), t});
  }
  return probes;
}

namespace {

ResidualReport make_report(std::vector<double> residuals, std::span<const ProbePoint> probes,
                           const FdSteps& steps) {
  ResidualReport report;
  report.grid.assign(probes.begin(), probes.end());
  report.residuals = std::move(residuals);
  for (double r : report.residuals) {
    report.max_abs_residual = std::max(report.max_abs_residual, std::abs(r));
    if (!std::isfinite(r)) report.max_abs_residual = std::numeric_limits<double>::infinity();
  }
  report.fd_step_space = steps.space.value_or(0.0);
  report.fd_step_time = steps.time;
  return report;
}

}  // namespace

ResidualReport residual_report_serial(const DensityFunction& density, const FieldFunction& field,
                                      const std::function<double(double)>& sigma,
                                      std::span<const ProbePoint> probes, const FdSteps& steps,
                                      const TimeClamp& clamp) {
  std::vector<double> residuals(probes.size());
  for (std::size_t k = 0; k < probes.size(); ++k) {
    residuals[k] = fokker_planck_residual(density, field, sigma, probes[k].x, probes[k].t, steps,
                                          clamp);
  }
  return make_report(std::move(residuals), probes, steps);
}

ResidualReport residual_report(const DensityFunction& density, const FieldFunction& field,
                               const std::function<double(double)>& sigma,
                               std::span<const ProbePoint> probes, const FdSteps& steps,
                               const TimeClamp& clamp) {
  std::vector<double> residuals(probes.size());
  parallel_for(probes.size(), [&](std::size_t k) {
    residuals[k] = fokker_planck_residual(density, field, sigma, probes[k].x, probes[k].t, steps,
                                          clamp);
  });
  return make_report(std::move(residuals), probes, steps);
}

namespace {

std::vector<double> trapezoid_weights(std::size_t nodes, double step) {
  std::vector<double> w(nodes, step);
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

void validate_quadrature(const GaussianPath& path, const Dataset& data,
                         const LossGapQuadrature& quad) {
  if (data.dim != 1 || path.dim != 1) throw DomainError("loss gap probe requires d = 1");
  if (quad.x_nodes < 2 || quad.t_nodes < 2 || !(quad.x_max > quad.x_min) ||
      !(quad.t_max > quad.t_min)) {
    throw DomainError("degenerate quadrature grid");
  }
  const double dt = (quad.t_max - quad.t_min) / static_cast<double>(quad.t_nodes - 1);
  for (std::size_t k = 0; k < quad.t_nodes; ++k) {
    const double t = quad.t_min + dt * static_cast<double>(k);
    const ScheduleValues s = path.at(t);
    if (s.beta <= kSingularityTolerance) throw SingularityError("loss gap probe needs beta_t > 0");
    for (const auto& z : data.points) {
      const double mean = s.alpha * z[0];
      const double scale = s.beta * std::numbers::sqrt2;
      const double tail = 0.5 * std::erfc((quad.x_max - mean) / scale) +
                          0.5 * std::erfc((mean - quad.x_min) / scale);
      if (tail > 1e-8) {
        throw DomainError("quadrature range leaves tail mass " + std::to_string(tail) +
                          " at t = " + std::to_string(t));
      }
    }
  }
}

// Contributions of one time node, already weighted by the x-quadrature.
LossGap loss_gap_at_time(const GaussianPath& path, const Dataset& data,
                         const FieldFunction& field_a, const FieldFunction& field_b,
                         const LossGapQuadrature& quad, double t) {
  const double dx = (quad.x_max - quad.x_min) / static_cast<double>(quad.x_nodes - 1);
  const std::vector<double> wx = trapezoid_weights(quad.x_nodes, dx);
  LossGap acc{0.0, 0.0, 0.0, 0.0};
  double x[1];
  for (std::size_t m = 0; m < quad.x_nodes; ++m) {
    x[0] = quad.x_min + dx * static_cast<double>(m);
    const double fa = field_a(x, t)[0];
    const double fb = field_b(x, t)[0];
    const double p = marginal_density(path, data, x, t);
    const double target = marginal_vector_field(path, data, x, t)[0];
    acc.fm_a += wx[m] * p * (fa - target) * (fa - target);
    acc.fm_b += wx[m] * p * (fb - target) * (fb - target);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double pc = data.weights[i] * std::exp(cond_log_density(path, x, data.points[i], t));
      const double uc = cond_vector_field(path, x, data.points[i], t)[0];
      acc.cfm_a += wx[m] * pc * (fa - uc) * (fa - uc);
      acc.cfm_b += wx[m] * pc * (fb - uc) * (fb - uc);
    }
  }
  return acc;
}

LossGap reduce_time_nodes(const std::vector<LossGap>& per_t, const LossGapQuadrature& quad) {
  const double dt = (quad.t_max - quad.t_min) / static_cast<double>(quad.t_nodes - 1);
  // Average over t ~ Unif[t_min, t_max].
  const std::vector<double> wt = trapezoid_weights(quad.t_nodes, dt / (quad.t_max - quad.t_min));
  LossGap total{0.0, 0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < per_t.size(); ++k) {
    total.fm_a += wt[k] * per_t[k].fm_a;
    total.cfm_a += wt[k] * per_t[k].cfm_a;
    total.fm_b += wt[k] * per_t[k].fm_b;
    total.cfm_b += wt[k] * per_t[k].cfm_b;
  }
  return total;
}

}  // namespace

LossGap loss_gap_probe_serial(const GaussianPath& path, const Dataset& data,
                              const FieldFunction& field_a, const FieldFunction& field_b,
                              const LossGapQuadrature& quad) {
  validate_quadrature(path, data, quad);
  const double dt = (quad.t_max - quad.t_min) / static_cast<double>(quad.t_nodes - 1);
  std::vector<LossGap> per_t(quad.t_nodes);
  for (std::size_t k = 0; k < quad.t_nodes; ++k) {
    per_t[k] = loss_gap_at_time(path, data, field_a, field_b, quad,
                                quad.t_min + dt * static_cast<double>(k));
  }
  return reduce_time_nodes(per_t, quad);
}

LossGap loss_gap_probe(const GaussianPath& path, const Dataset& data, const FieldFunction& field_a,
                       const FieldFunction& field_b, const LossGapQuadrature& quad) {
  validate_quadrature(path, data, quad);
  const double dt = (quad.t_max - quad.t_min) / static_cast<double>(quad.t_nodes - 1);
  std::vector<LossGap> per_t(quad.t_nodes);
  parallel_for(quad.t_nodes, [&](std::size_t k) {
    per_t[k] = loss_gap_at_time(path, data, field_a, field_b, quad,
                                quad.t_min + dt * static_cast<double>(k));
  });
  return reduce_time_nodes(per_t, quad);
}

}  // namespace flowlab
