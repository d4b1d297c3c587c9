#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowlab/field.hpp"

namespace flowlab {

enum class Activation { kSilu, kTanh };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

/// Feed-forward network u(x, t | y) on the input [x | time features | label embedding].
/// The label embedding is present only when n_classes > 0; its table has
/// n_classes + 1 rows, the last one for the null label.
struct MlpSpec {
  std::size_t dim = 2;
  std::vector<std::size_t> hidden = {64, 64, 64};
  std::size_t n_time_features = 8;
  int n_classes = 0;
  std::size_t embed_dim = 8;
  Activation activation = Activation::kSilu;

  bool conditional() const noexcept { return n_classes > 0; }
  std::size_t input_width() const noexcept;
  std::size_t parameter_count() const;
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

/// One named tensor inside the flat parameter vector. Weights are stored
/// row-major with shape (fan_in, fan_out).
struct TensorSlot {
  std::string name;
  std::size_t offset;
  std::size_t rows;
  std::size_t cols;

  std::size_t size() const noexcept { return rows * cols; }
};

std::vector<TensorSlot> parameter_layout(const MlpSpec& spec);

struct MlpParams {
  MlpSpec spec;
  std::vector<double> values;
};

/// d loss / d parameter, laid out exactly like MlpParams::values.
struct GradSet {
  std::vector<double> values;
};

/// Weights ~ N(0, 1 / fan_in), biases 0, embeddings ~ N(0, 1). Deterministic in seed.
MlpParams mlp_init(const MlpSpec& spec, std::uint64_t seed);

/// (sin(2^j pi t), cos(2^j pi t)) for j = 0 .. n / 2 - 1, interleaved.
void time_features(double t, std::span<double> out);

/// Throws DomainError for labels the spec cannot embed.
void check_label(const MlpSpec& spec, Label y);

Vector forward(const MlpParams& params, std::span<const double> x, double t, Label y);

/// d <cotangent, forward(x)> / dx through the reverse pass.
Vector input_gradient(const MlpParams& params, std::span<const double> x, double t, Label y,
                      std::span<const double> cotangent);

/// Regression batch of (x, t, y, target) items, stored flat.
struct TrainingBatch {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<double> t;
  std::vector<Label> labels;
  std::vector<double> target;

  explicit TrainingBatch(std::size_t d = 0) : dim(d) {}
  std::size_t size() const noexcept { return t.size(); }
  void push(std::span<const double> xi, double ti, Label yi, std::span<const double> target_i);
  std::span<const double> x_at(std::size_t i) const { return {x.data() + i * dim, dim}; }
  std::span<const double> target_at(std::size_t i) const { return {target.data() + i * dim, dim}; }
};

struct LossAndGrads {
  double loss;
  GradSet grads;
};

/// loss = mean_i ||forward(x_i, t_i, y_i) - target_i||^2 with exact reverse-mode
/// gradients. OpenMP over fixed chunks of items, reduced in chunk order.
LossAndGrads mse_loss_and_grads(const MlpParams& params, const TrainingBatch& batch);
LossAndGrads mse_loss_and_grads_serial(const MlpParams& params, const TrainingBatch& batch);

/// Loss only, evaluated in long double. Reference for finite differences.
long double mse_loss_extended(const MlpSpec& spec, std::span<const long double> theta,
                              const TrainingBatch& batch);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = true;
};

/// Compares `grads` to central differences with step 1e-6 (1 + |theta_j|),
/// error |analytic - fd| / (|fd| + 1e-8). The differenced loss is evaluated in
/// long double so round-off stays well below the tolerance.
GradCheckReport grad_check(const MlpParams& params, const TrainingBatch& batch,
                           const GradSet& grads, double tolerance = 1e-5);
GradCheckReport grad_check(const MlpParams& params, const TrainingBatch& batch,
                           double tolerance = 1e-5);

/// Binds the network as a field object.
LabeledField as_labeled_field(MlpParams params);
FieldFunction as_field(MlpParams params, Label y = kNullLabel);

}  // namespace flowlab
