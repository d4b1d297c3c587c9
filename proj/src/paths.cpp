#include "flowlab/paths.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "flowlab/error.hpp"

namespace flowlab {

namespace {

void check_dims(const GaussianPath& path, std::span<const double> a, std::span<const double> b) {
  if (a.size() != path.dim || b.size() != path.dim) {
    throw DomainError("point dimension does not match path dimension " +
                      std::to_string(path.dim));
  }
}

double require_beta(const ScheduleValues& s, double t) {
  if (std::abs(s.beta) <= kSingularityTolerance) {
    throw SingularityError("beta_t vanishes at t = " + std::to_string(t));
  }
  return s.beta;
}

}  // namespace

std::string_view to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::kCondOT: return "condot";
    case ScheduleKind::kTrig: return "trig";
  }
  return "condot";
}

ScheduleKind schedule_kind_from_string(std::string_view name) {
  if (name == "condot") return ScheduleKind::kCondOT;
  if (name == "trig") return ScheduleKind::kTrig;
  throw DomainError("unknown schedule '" + std::string(name) + "'");
}

ScheduleValues NoiseSchedule::operator()(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("schedule time " + std::to_string(t) + " outside [0, 1]");
  }
  switch (kind) {
    case ScheduleKind::kCondOT:
      return {t, 1.0 - t, 1.0, -1.0};
    case ScheduleKind::kTrig: {
      constexpr double half_pi = std::numbers::pi / 2.0;
      // cos(pi/2) is 6e-17 in floating point; pin the endpoints.
      if (t == 0.0) return {0.0, 1.0, half_pi, 0.0};
      if (t == 1.0) return {1.0, 0.0, 0.0, -half_pi};
      const double s = std::sin(half_pi * t);
      const double c = std::cos(half_pi * t);
      return {s, c, half_pi * c, -half_pi * s};
    }
  }
  throw DomainError("invalid schedule kind");
}

double TimeClamp::apply(double t) const noexcept {
  if (t < lower()) return lower();
  if (t > upper()) return upper();
  return t;
}

void TimeClamp::validate() const {
  if (!(eps_low >= 0.0) || !(eps_high > 0.0) || eps_low + eps_high >= 1.0) {
    throw DomainError("time clamp requires eps_low >= 0, eps_high > 0, eps_low + eps_high < 1");
  }
}

Vector cond_sample(const GaussianPath& path, std::span<const double> z, double t, Rng& rng) {
  if (z.size() != path.dim) throw DomainError("data point dimension mismatch");
  const ScheduleValues s = path.at(t);
  Vector x(path.dim);
  for (std::size_t j = 0; j < path.dim; ++j) {
    const double eps = rng.normal();
    x[j] = s.alpha * z[j] + s.beta * eps;
  }
  return x;
}

Vector cond_vector_field(const GaussianPath& path, std::span<const double> x,
                         std::span<const double> z, double t) {
  check_dims(path, x, z);
  const ScheduleValues s = path.at(t);
  const double ratio = s.beta_dot / require_beta(s, t);
  const double z_coef = s.alpha_dot - ratio * s.alpha;
  Vector u(path.dim);
  for (std::size_t j = 0; j < path.dim; ++j) u[j] = z_coef * z[j] + ratio * x[j];
  return u;
}

Vector cond_flow(const GaussianPath& path, std::span<const double> x0, std::span<const double> z,
                 double t) {
  check_dims(path, x0, z);
  const ScheduleValues s = path.at(t);
  Vector x(path.dim);
  for (std::size_t j = 0; j < path.dim; ++j) x[j] = s.alpha * z[j] + s.beta * x0[j];
  return x;
}

Vector cond_score(const GaussianPath& path, std::span<const double> x, std::span<const double> z,
                  double t) {
  check_dims(path, x, z);
  const ScheduleValues s = path.at(t);
  const double beta = require_beta(s, t);
  const double inv_var = 1.0 / (beta * beta);
  Vector score(path.dim);
  for (std::size_t j = 0; j < path.dim; ++j) score[j] = -(x[j] - s.alpha * z[j]) * inv_var;
  return score;
}

double cond_log_density(const GaussianPath& path, std::span<const double> x,
                        std::span<const double> z, double t) {
  check_dims(path, x, z);
  const ScheduleValues s = path.at(t);
  const double beta = require_beta(s, t);
  double sq = 0.0;
  for (std::size_t j = 0; j < path.dim; ++j) {
    const double r = x[j] - s.alpha * z[j];
    sq += r * r;
  }
  const double d = static_cast<double>(path.dim);
  return -0.5 * sq / (beta * beta) - d * std::log(beta) - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

Vector score_to_velocity(const GaussianPath& path, std::span<const double> x, double t,
                         std::span<const double> score) {
  check_dims(path, x, score);
  const ScheduleValues s = path.at(t);
  if (std::abs(s.alpha) <= kSingularityTolerance) {
    throw SingularityError("alpha_t vanishes at t = " + std::to_string(t));
  }
  const double x_coef = s.alpha_dot / s.alpha;
  const double score_coef = s.beta * s.beta * x_coef - s.beta_dot * s.beta;
  Vector u(path.dim);
  for (std::size_t j = 0; j < path.dim; ++j) u[j] = score_coef * score[j] + x_coef * x[j];
  return u;
}

Vector velocity_to_score(const GaussianPath& path, std::span<const double> x, double t,
                         std::span<const double> velocity) {
  check_dims(path, x, velocity);
  const ScheduleValues s = path.at(t);
  const double denom = s.beta * s.beta * s.alpha_dot - s.alpha * s.beta_dot * s.beta;
  if (std::abs(denom) <= kSingularityTolerance) {
    throw SingularityError("velocity-to-score denominator vanishes at t = " + std::to_string(t));
  }
  Vector score(path.dim);
  for (std::size_t j = 0; j < path.dim; ++j) {
    score[j] = (s.alpha * velocity[j] - s.alpha_dot * x[j]) / denom;
  }
  return score;
}

Vector noise_to_score(const GaussianPath& path, double t, std::span<const double> noise) {
  if (noise.size() != path.dim) throw DomainError("noise dimension mismatch");
  const ScheduleValues s = path.at(t);
  const double beta = require_beta(s, t);
  Vector score(path.dim);
  for (std::size_t j = 0; j < path.dim; ++j) score[j] = -noise[j] / beta;
  return score;
}

}  // namespace flowlab
