#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowlab/rng.hpp"

namespace flowlab {

using Vector = std::vector<double>;

/// |alpha_t|, |beta_t| or a conversion denominator at or below this is a singularity.
inline constexpr double kSingularityTolerance = 1e-12;

enum class ScheduleKind { kCondOT, kTrig };

std::string_view to_string(ScheduleKind kind) noexcept;
ScheduleKind schedule_kind_from_string(std::string_view name);

struct ScheduleValues {
  double alpha;
  double beta;
  double alpha_dot;
  double beta_dot;
};

/// Noise scheduler (alpha_t, beta_t) of a Gaussian conditional path.
///
/// condot: alpha = t, beta = 1 - t.
/// trig:   alpha = sin(pi t / 2), beta = cos(pi t / 2).
/// Both satisfy alpha_0 = beta_1 = 0 and alpha_1 = beta_0 = 1 exactly.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::kCondOT;

  /// Throws DomainError for t outside [0, 1].
  ScheduleValues operator()(double t) const;
};

/// p_t(.|z) = N(alpha_t z, beta_t^2 I_d).
struct GaussianPath {
  NoiseSchedule schedule;
  std::size_t dim = 1;

  ScheduleValues at(double t) const { return schedule(t); }
};

/// Keeps t inside [eps_low, 1 - eps_high], away from the alpha_0 = 0 and
/// beta_1 = 0 singularities.
struct TimeClamp {
  double eps_low = 1e-4;
  double eps_high = 1e-3;

  double lower() const noexcept { return eps_low; }
  double upper() const noexcept { return 1.0 - eps_high; }
  double apply(double t) const noexcept;
  bool contains(double t) const noexcept { return t >= lower() && t <= upper(); }
  void validate() const;
};

/// Draws x = alpha_t z + beta_t eps with eps ~ N(0, I).
Vector cond_sample(const GaussianPath& path, std::span<const double> z, double t, Rng& rng);

/// u_t(x|z) = (alpha_dot - beta_dot / beta * alpha) z + beta_dot / beta * x.
Vector cond_vector_field(const GaussianPath& path, std::span<const double> x,
                         std::span<const double> z, double t);

/// psi_t(x0|z) = alpha_t z + beta_t x0.
Vector cond_flow(const GaussianPath& path, std::span<const double> x0, std::span<const double> z,
                 double t);

/// grad log p_t(x|z) = -(x - alpha_t z) / beta_t^2.
Vector cond_score(const GaussianPath& path, std::span<const double> x, std::span<const double> z,
                  double t);

/// log N(x; alpha_t z, beta_t^2 I).
double cond_log_density(const GaussianPath& path, std::span<const double> x,
                        std::span<const double> z, double t);

/// u = (beta^2 alpha_dot / alpha - beta_dot beta) s + (alpha_dot / alpha) x.
/// Holds for conditional and marginal pairs alike. Requires alpha_t > 0.
Vector score_to_velocity(const GaussianPath& path, std::span<const double> x, double t,
                         std::span<const double> score);

/// s = (alpha u - alpha_dot x) / (beta^2 alpha_dot - alpha beta_dot beta).
Vector velocity_to_score(const GaussianPath& path, std::span<const double> x, double t,
                         std::span<const double> velocity);

/// Converts a noise prediction to a score: s = -eps / beta_t.
Vector noise_to_score(const GaussianPath& path, double t, std::span<const double> noise);

}  // namespace flowlab
