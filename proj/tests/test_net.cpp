#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "flowlab/error.hpp"
#include "flowlab/net.hpp"
#include "flowlab/parallel.hpp"
#include "flowlab/rng.hpp"

using namespace flowlab;

namespace {

MlpSpec small_spec(Activation act, int classes) {
  MlpSpec spec;
  spec.hidden = {12, 10, 8};
  spec.n_time_features = 4;
  spec.activation = act;
  spec.n_classes = classes;
  spec.embed_dim = 3;
  return spec;
}

TrainingBatch random_batch(const MlpSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  TrainingBatch b(spec.dim);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(spec.dim), target(spec.dim);
    rng.fill_normal(x);
    rng.fill_normal(target);
    Label y = kNullLabel;
    if (spec.conditional() && rng.uniform() < 0.7) y = static_cast<int>(rng.below(spec.n_classes));
    b.push(x, rng.uniform(), y, target);
  }
  return b;
}

}  // namespace

TEST_CASE("parameter layout and count") {
  MlpSpec spec;
  CHECK(spec.input_width() == 10);
  CHECK(spec.parameter_count() == 10 * 64 + 64 + 2 * (64 * 64 + 64) + 64 * 2 + 2);
  auto layout = parameter_layout(spec);
  CHECK(layout.front().name == "layer0.weight");
  CHECK(layout.front().rows == 10);
  CHECK(layout.back().name == "layer3.bias");

  spec.n_classes = 4;
  CHECK(spec.input_width() == 18);
  layout = parameter_layout(spec);
  auto emb = std::find_if(layout.begin(), layout.end(),
                          [](const TensorSlot& s) { return s.name == "label_embedding"; });
  REQUIRE(emb != layout.end());
  CHECK(emb->rows == 5);
  CHECK(emb->cols == 8);
}

TEST_CASE("init") {
  MlpSpec spec = small_spec(Activation::kSilu, 2);
  auto a = mlp_init(spec, 3), b = mlp_init(spec, 3), c = mlp_init(spec, 4);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  for (const auto& slot : parameter_layout(spec)) {
    if (slot.name.find("bias") == std::string::npos) continue;
    for (std::size_t i = 0; i < slot.size(); ++i) CHECK(a.values[slot.offset + i] == 0.0);
  }
}

TEST_CASE("forward") {
  MlpSpec spec = small_spec(Activation::kTanh, 3);
  MlpParams zero{spec, std::vector<double>(spec.parameter_count(), 0.0)};
  auto out = forward(zero, Vector{0.3, -1.0}, 0.2, 1);
  CHECK(out == Vector{0.0, 0.0});

  auto p = mlp_init(spec, 1);
  CHECK(forward(p, Vector{0.3, -1.0}, 0.2, 1) == forward(p, Vector{0.3, -1.0}, 0.2, 1));
  CHECK(forward(p, Vector{0.3, -1.0}, 0.2, 1) != forward(p, Vector{0.3, -1.0}, 0.2, kNullLabel));
  CHECK_THROWS_AS(forward(p, Vector{0.3, -1.0}, 0.2, 3), DomainError);
  CHECK_THROWS_AS(forward(p, Vector{0.3, -1.0}, 0.2, -1), DomainError);

  auto u = mlp_init(small_spec(Activation::kSilu, 0), 1);
  CHECK_THROWS_AS(forward(u, Vector{0.0, 0.0}, 0.5, 0), DomainError);
}

TEST_CASE("jacobian-vector product matches directional differences") {
  for (Activation act : {Activation::kSilu, Activation::kTanh}) {
    auto p = mlp_init(small_spec(act, 2), 5);
    const Vector x{0.4, -0.9}, dir{0.6, 0.8};
    const double t = 0.35, h = 1e-6;
    Vector xp = x, xm = x;
    for (int j = 0; j < 2; ++j) {
      xp[j] += h * dir[j];
      xm[j] -= h * dir[j];
    }
    auto fp = forward(p, xp, t, 1), fm = forward(p, xm, t, 1);
    for (int k = 0; k < 2; ++k) {
      Vector e(2, 0.0);
      e[k] = 1.0;
      auto g = input_gradient(p, x, t, 1, e);
      const double jvp = g[0] * dir[0] + g[1] * dir[1];
      const double fd = (fp[k] - fm[k]) / (2 * h);
      CHECK(std::abs(jvp - fd) <= 1e-6 * (std::abs(fd) + 1e-3));
    }
  }
}

TEST_CASE("mse loss") {
  MlpSpec spec = small_spec(Activation::kSilu, 0);
  spec.dim = 1;
  MlpParams zero{spec, std::vector<double>(spec.parameter_count(), 0.0)};
  TrainingBatch b(1);
  b.push(Vector{0.2}, 0.5, kNullLabel, Vector{-1.0});
  CHECK(mse_loss_and_grads(zero, b).loss == 1.0);

  auto p = mlp_init(spec, 2);
  TrainingBatch exact(1);
  for (double x : {-1.0, 0.5, 2.0}) exact.push(Vector{x}, 0.3, kNullLabel, forward(p, Vector{x}, 0.3, kNullLabel));
  auto lg = mse_loss_and_grads(p, exact);
  CHECK(lg.loss == 0.0);
  CHECK(std::all_of(lg.grads.values.begin(), lg.grads.values.end(), [](double g) { return g == 0.0; }));

  TrainingBatch bad(1);
  bad.push(Vector{0.0}, 0.5, kNullLabel, Vector{std::nan("")});
  CHECK_THROWS_AS(mse_loss_and_grads(p, bad), DomainError);
}

TEST_CASE("gradient check") {
  for (Activation act : {Activation::kSilu, Activation::kTanh}) {
    for (int classes : {0, 3}) {
      CAPTURE(classes);
      auto spec = small_spec(act, classes);
      auto p = mlp_init(spec, 17);
      auto batch = random_batch(spec, 6, 99);
      auto rep = grad_check(p, batch);
      CHECK(rep.passed);
      CHECK(rep.max_relative_error < 1e-5);

      GradSet zeros{std::vector<double>(spec.parameter_count(), 0.0)};
      auto bad = grad_check(p, batch, zeros);
      CHECK_FALSE(bad.passed);
      CHECK(bad.max_relative_error == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
  auto spec = small_spec(Activation::kSilu, 0);
  MlpParams zero{spec, std::vector<double>(spec.parameter_count(), 0.0)};
  TrainingBatch b(2);
  b.push(Vector{0.1, 0.2}, 0.5, kNullLabel, Vector{0.0, 0.0});
  auto rep = grad_check(zero, b);
  CHECK(rep.max_relative_error == 0.0);
}

TEST_CASE("parallel gradients match the serial reference") {
  auto spec = small_spec(Activation::kSilu, 4);
  auto p = mlp_init(spec, 8);
  auto batch = random_batch(spec, 103, 12);
  auto ser = mse_loss_and_grads_serial(p, batch);
  for (int threads : {1, 3, 0}) {
    set_thread_limit(threads);
    auto par = mse_loss_and_grads(p, batch);
    CHECK(par.loss == doctest::Approx(ser.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < ser.grads.values.size(); ++i) {
      REQUIRE(std::abs(par.grads.values[i] - ser.grads.values[i]) <=
              1e-12 * (1 + std::abs(ser.grads.values[i])));
    }
  }
  set_thread_limit(1);
  auto one = mse_loss_and_grads(p, batch);
  set_thread_limit(0);
  auto many = mse_loss_and_grads(p, batch);
  CHECK(one.grads.values == many.grads.values);
}
