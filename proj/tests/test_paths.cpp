#include <cmath>
#include <numbers>

#include "doctest.h"
#include "flowlab/error.hpp"
#include "flowlab/paths.hpp"

using namespace flowlab;

namespace {
const GaussianPath kCondOT1{NoiseSchedule{ScheduleKind::kCondOT}, 1};
const GaussianPath kTrig1{NoiseSchedule{ScheduleKind::kTrig}, 1};
}  // namespace

TEST_CASE("schedule values") {
  auto v = kCondOT1.at(0.0);
  CHECK(v.alpha == 0.0);
  CHECK(v.beta == 1.0);
  CHECK(v.alpha_dot == 1.0);
  CHECK(v.beta_dot == -1.0);
  v = kCondOT1.at(0.5);
  CHECK(v.alpha == 0.5);
  CHECK(v.beta == 0.5);

  v = kTrig1.at(0.0);
  CHECK(v.alpha == 0.0);
  CHECK(v.beta == 1.0);
  CHECK(v.alpha_dot == doctest::Approx(std::numbers::pi / 2));
  CHECK(v.beta_dot == doctest::Approx(0.0));
  v = kTrig1.at(1.0);
  CHECK(v.alpha == 1.0);
  CHECK(v.beta == 0.0);

  CHECK_THROWS_AS(kCondOT1.at(-0.1), DomainError);
  CHECK_THROWS_AS(kTrig1.at(1.5), DomainError);
}

TEST_CASE("schedule derivatives match finite differences") {
  for (const auto& path : {kCondOT1, kTrig1}) {
    for (double t : {0.1, 0.37, 0.8}) {
      const double h = 1e-6;
      auto a = path.at(t + h), b = path.at(t - h), v = path.at(t);
      CHECK(v.alpha_dot == doctest::Approx((a.alpha - b.alpha) / (2 * h)).epsilon(1e-7));
      CHECK(v.beta_dot == doctest::Approx((a.beta - b.beta) / (2 * h)).epsilon(1e-7));
    }
  }
}

TEST_CASE("cond_sample") {
  Rng rng(3);
  const Vector z{1.5, -2.0};
  const GaussianPath p2{NoiseSchedule{ScheduleKind::kCondOT}, 2};
  CHECK(cond_sample(p2, z, 1.0, rng) == z);

  const Vector z2{2.0, 0.0};
  const int n = 100000;
  double m0 = 0, m1 = 0, s0 = 0, s1 = 0;
  for (int i = 0; i < n; ++i) {
    auto x = cond_sample(p2, z2, 0.5, rng);
    m0 += x[0];
    m1 += x[1];
    s0 += x[0] * x[0];
    s1 += x[1] * x[1];
  }
  m0 /= n;
  m1 /= n;
  CHECK(m0 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(m1) < 0.02 * 0.5);
  CHECK(s0 / n - m0 * m0 == doctest::Approx(0.25).epsilon(0.02));
  CHECK(s1 / n - m1 * m1 == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("cond_vector_field") {
  CHECK(cond_vector_field(kCondOT1, Vector{1.0}, Vector{2.0}, 0.5)[0] == doctest::Approx(2.0));
  for (const auto& path : {kCondOT1, kTrig1}) {
    const double t = 0.3, z = 1.7;
    auto v = path.at(t);
    auto u = cond_vector_field(path, Vector{v.alpha * z}, Vector{z}, t);
    CHECK(u[0] == doctest::Approx(v.alpha_dot * z));
  }
  // x = t z + (1 - t) eps gives z - eps
  const double t = 0.25, z = 0.8, eps = -1.3;
  auto u = cond_vector_field(kCondOT1, Vector{t * z + (1 - t) * eps}, Vector{z}, t);
  CHECK(u[0] == doctest::Approx(z - eps));
  CHECK_THROWS_AS(cond_vector_field(kCondOT1, Vector{0.0}, Vector{1.0}, 1.0), SingularityError);
}

TEST_CASE("cond_flow") {
  CHECK(cond_flow(kCondOT1, Vector{-1.0}, Vector{2.0}, 0.5)[0] == doctest::Approx(0.5));
  CHECK(cond_flow(kTrig1, Vector{0.3}, Vector{2.0}, 0.0)[0] == 0.3);
  CHECK(cond_flow(kTrig1, Vector{0.3}, Vector{2.0}, 1.0)[0] == 2.0);
}

TEST_CASE("cond_score") {
  CHECK(cond_score(kCondOT1, Vector{2.0}, Vector{2.0}, 0.5)[0] == doctest::Approx(-4.0));
  CHECK(cond_score(kTrig1, Vector{std::sin(0.5 * std::numbers::pi * 0.4)}, Vector{1.0}, 0.4)[0] ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(cond_score(kCondOT1, Vector{0.0}, Vector{1.0}, 1.0), SingularityError);

  const GaussianPath p2{NoiseSchedule{ScheduleKind::kTrig}, 2};
  const Vector z{0.4, -1.2};
  for (double t : {0.1, 0.5, 0.9}) {
    Vector x{0.3, 0.2};
    auto s = cond_score(p2, x, z, t);
    for (std::size_t j = 0; j < 2; ++j) {
      const double h = 1e-5;
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd = (cond_log_density(p2, xp, z, t) - cond_log_density(p2, xm, z, t)) / (2 * h);
      CHECK(std::abs(fd - s[j]) < 1e-6 * (1 + std::abs(s[j])));
    }
  }
}

TEST_CASE("score/velocity conversion") {
  // u = s + 2x at condot t = 0.5
  auto u = score_to_velocity(kCondOT1, Vector{0.7}, 0.5, Vector{-1.1});
  CHECK(u[0] == doctest::Approx(-1.1 + 2 * 0.7));
  CHECK(velocity_to_score(kCondOT1, Vector{0.0}, 0.5, Vector{1.0})[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(velocity_to_score(kCondOT1, Vector{0.0}, 1.0, Vector{1.0}), SingularityError);
  CHECK_THROWS_AS(score_to_velocity(kCondOT1, Vector{0.0}, 0.0, Vector{1.0}), SingularityError);

  for (const auto& path : {kCondOT1, kTrig1}) {
    for (double t : {0.05, 0.5, 0.95}) {
      const Vector x{-0.6}, z{1.3};
      auto s = cond_score(path, x, z, t);
      auto uu = cond_vector_field(path, x, z, t);
      CHECK(std::abs(score_to_velocity(path, x, t, s)[0] - uu[0]) <= 1e-12 * (1 + std::abs(uu[0])));
      CHECK(std::abs(velocity_to_score(path, x, t, uu)[0] - s[0]) <= 1e-12 * (1 + std::abs(s[0])));
    }
  }
}

TEST_CASE("noise_to_score") {
  CHECK(noise_to_score(kCondOT1, 0.5, Vector{1.0})[0] == doctest::Approx(-2.0));
  CHECK_THROWS_AS(noise_to_score(kCondOT1, 1.0, Vector{1.0}), SingularityError);
}

TEST_CASE("time clamp") {
  TimeClamp c;
  CHECK(c.apply(0.0) == c.lower());
  CHECK(c.apply(1.0) == c.upper());
  CHECK(c.apply(0.5) == 0.5);
  CHECK_THROWS_AS((TimeClamp{0.6, 0.6}.validate()), DomainError);
}
