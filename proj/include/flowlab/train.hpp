#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "flowlab/net.hpp"
#include "flowlab/oracle.hpp"
#include "flowlab/paths.hpp"
#include "flowlab/rng.hpp"

namespace flowlab {

/// What the network regresses onto.
///   cfm:      conditional velocity alpha_dot z + beta_dot eps
///   csm:      conditional score -eps / beta_t
///   ddpm_eps: the noise eps itself
enum class LossKind { kCfm, kCsm, kDdpmEps };

std::string_view to_string(LossKind kind) noexcept;
LossKind loss_kind_from_string(std::string_view name);

struct TrainConfig {
  LossKind loss_kind = LossKind::kCfm;
  ScheduleKind schedule = ScheduleKind::kCondOT;
  std::size_t batch_size = 256;
  std::size_t n_steps = 5000;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double label_drop_eta = 0.1;
  TimeClamp t_clamp;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr std::size_t kLossLogInterval = 50;

/// One draw (z, y, t, eps) of the training expectation.
struct PathSample {
  Vector z;
  Label y;
  double t;
  Vector eps;
};

/// Draws a minibatch: z i.i.d. with replacement by dataset weight, t uniform on
/// [0, 1) for cfm / ddpm_eps and on the clamp interval for csm, eps ~ N(0, I).
/// When `conditional`, y is the data label replaced by the null label with
/// probability label_drop_eta; otherwise y is always null.
std::vector<PathSample> draw_path_samples(const Dataset& data, Rng& rng, const TrainConfig& config,
                                          bool conditional);

/// x = alpha_t z + beta_t eps with the regression target for `kind`.
TrainingBatch regression_batch(const GaussianPath& path, LossKind kind,
                               std::span<const PathSample> samples);

LossAndGrads cfm_batch_loss(const MlpParams& params, const GaussianPath& path, const Dataset& data,
                            Rng& rng, const TrainConfig& config);
LossAndGrads csm_batch_loss(const MlpParams& params, const GaussianPath& path, const Dataset& data,
                            Rng& rng, const TrainConfig& config);
LossAndGrads ddpm_eps_batch_loss(const MlpParams& params, const GaussianPath& path,
                                 const Dataset& data, Rng& rng, const TrainConfig& config);
/// Classifier-free guidance training: CFM with label dropping. Requires a
/// labeled dataset and a conditional network.
LossAndGrads cfg_batch_loss(const MlpParams& params, const GaussianPath& path, const Dataset& data,
                            Rng& rng, const TrainConfig& config);

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step = 0;

  static OptimizerState zeros_like(const MlpParams& params);
};

/// Bias-corrected Adam update. Throws TrainingError on non-finite gradients.
void adam_step(MlpParams& params, const GradSet& grads, OptimizerState& state,
               const TrainConfig& config);

struct LossRecord {
  std::size_t step;
  double loss;
};

struct TrainResult {
  MlpParams params;
  std::vector<LossRecord> history;  // every kLossLogInterval steps
  std::size_t steps = 0;
};

/// n_steps of (batch loss, Adam). Parameters come from mlp_init(spec, seed) and
/// minibatches from Rng(seed, 1), so a run is reproducible bit for bit.
TrainResult train(const TrainConfig& config, const Dataset& data, const MlpSpec& spec);

/// Velocity and score views of a trained network, converted through the
/// Gaussian-path formulas when the network regresses something else. Times are
/// clamped into `clamp` wherever a conversion would divide by alpha_t or beta_t.
LabeledField velocity_model(const MlpParams& params, LossKind kind, const GaussianPath& path,
                            const TimeClamp& clamp = {});
LabeledField score_model(const MlpParams& params, LossKind kind, const GaussianPath& path,
                         const TimeClamp& clamp = {});

}  // namespace flowlab
