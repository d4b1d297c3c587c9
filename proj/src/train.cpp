#include "flowlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "flowlab/error.hpp"

namespace flowlab {

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::kCfm: return "cfm";
    case LossKind::kCsm: return "csm";
    case LossKind::kDdpmEps: return "ddpm_eps";
  }
  return "cfm";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "cfm") return LossKind::kCfm;
  if (name == "csm") return LossKind::kCsm;
  if (name == "ddpm_eps") return LossKind::kDdpmEps;
  throw DomainError("unknown loss kind '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be > 0");
  if (!(label_drop_eta >= 0.0 && label_drop_eta <= 1.0)) {
    throw DomainError("label_drop_eta must lie in [0, 1]");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw DomainError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw DomainError("adam_eps must be > 0");
  t_clamp.validate();
}

std::vector<PathSample> draw_path_samples(const Dataset& data, Rng& rng, const TrainConfig& config,
                                          bool conditional) {
  if (conditional && !data.labeled()) throw DomainError("conditional training needs labels");
  std::vector<PathSample> samples(config.batch_size);
  for (PathSample& s : samples) {
    double u = rng.uniform();
    std::size_t i = 0;
    while (i + 1 < data.size() && u >= data.weights[i]) {
      u -= data.weights[i];
      ++i;
    }
    s.z = data.points[i];
    const double r = rng.uniform();
    s.t = config.loss_kind == LossKind::kCsm
              ? config.t_clamp.lower() + (config.t_clamp.upper() - config.t_clamp.lower()) * r
              : r;
    s.eps.resize(data.dim);
    rng.fill_normal(s.eps);
    s.y = kNullLabel;
    if (conditional) {
      const bool drop = rng.bernoulli(config.label_drop_eta);
      if (!drop) s.y = data.labels[i];
    }
  }
  return samples;
}

TrainingBatch regression_batch(const GaussianPath& path, LossKind kind,
                               std::span<const PathSample> samples) {
  TrainingBatch batch(path.dim);
  Vector x(path.dim), target(path.dim);
  for (const PathSample& s : samples) {
    const ScheduleValues v = path.at(s.t);
    if (kind == LossKind::kCsm && std::abs(v.beta) <= kSingularityTolerance) {
      throw SingularityError("score target undefined at t = " + std::to_string(s.t));
    }
    for (std::size_t j = 0; j < path.dim; ++j) {
      x[j] = v.alpha * s.z[j] + v.beta * s.eps[j];
      switch (kind) {
        case LossKind::kCfm: target[j] = v.alpha_dot * s.z[j] + v.beta_dot * s.eps[j]; break;
        case LossKind::kCsm: target[j] = -s.eps[j] / v.beta; break;
        case LossKind::kDdpmEps: target[j] = s.eps[j]; break;
      }
    }
    batch.push(x, s.t, s.y, target);
  }
  return batch;
}

namespace {

LossAndGrads batch_loss(const MlpParams& params, const GaussianPath& path, const Dataset& data,
                        Rng& rng, TrainConfig config, LossKind kind) {
  config.loss_kind = kind;
  const auto samples = draw_path_samples(data, rng, config, params.spec.conditional());
  return mse_loss_and_grads(params, regression_batch(path, kind, samples));
}

}  // namespace

LossAndGrads cfm_batch_loss(const MlpParams& params, const GaussianPath& path, const Dataset& data,
                            Rng& rng, const TrainConfig& config) {
  return batch_loss(params, path, data, rng, config, LossKind::kCfm);
}

LossAndGrads csm_batch_loss(const MlpParams& params, const GaussianPath& path, const Dataset& data,
                            Rng& rng, const TrainConfig& config) {
  return batch_loss(params, path, data, rng, config, LossKind::kCsm);
}

LossAndGrads ddpm_eps_batch_loss(const MlpParams& params, const GaussianPath& path,
                                 const Dataset& data, Rng& rng, const TrainConfig& config) {
  return batch_loss(params, path, data, rng, config, LossKind::kDdpmEps);
}

LossAndGrads cfg_batch_loss(const MlpParams& params, const GaussianPath& path, const Dataset& data,
                            Rng& rng, const TrainConfig& config) {
  if (!data.labeled()) throw DomainError("classifier-free guidance training needs a labeled dataset");
  if (!params.spec.conditional()) {
    throw DomainError("classifier-free guidance training needs a conditional network");
  }
  if (data.n_classes() > params.spec.n_classes) {
    throw DomainError("dataset has more classes than the network embeds");
  }
  return batch_loss(params, path, data, rng, config, LossKind::kCfm);
}

OptimizerState OptimizerState::zeros_like(const MlpParams& params) {
  return {std::vector<double>(params.values.size(), 0.0),
          std::vector<double>(params.values.size(), 0.0), 0};
}

void adam_step(MlpParams& params, const GradSet& grads, OptimizerState& state,
               const TrainConfig& config) {
  const std::size_t p = params.values.size();
  if (grads.values.size() != p || state.first_moment.size() != p || state.second_moment.size() != p) {
    throw DomainError("optimizer shapes do not match parameters");
  }
  for (double g : grads.values) {
    if (!std::isfinite(g)) throw TrainingError("non-finite gradient", state.step);
  }
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double k = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(b1, k);
  const double correction2 = 1.0 - std::pow(b2, k);
  for (std::size_t i = 0; i < p; ++i) {
    const double g = grads.values[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params.values[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
  }
}

TrainResult train(const TrainConfig& config, const Dataset& data, const MlpSpec& spec) {
  config.validate();
  spec.validate();
  data.validate();
  if (spec.dim != data.dim) throw DomainError("network and dataset dimensions differ");
  if (spec.conditional()) {
    if (!data.labeled()) throw DomainError("conditional network needs a labeled dataset");
    if (data.n_classes() > spec.n_classes) {
      throw DomainError("dataset has more classes than the network embeds");
    }
  }
  const GaussianPath path{NoiseSchedule{config.schedule}, spec.dim};
  TrainResult result{mlp_init(spec, config.seed), {}, 0};
  OptimizerState state = OptimizerState::zeros_like(result.params);
  Rng rng(config.seed, 1);
  for (std::size_t step = 0; step < config.n_steps; ++step) {
    const auto samples = draw_path_samples(data, rng, config, spec.conditional());
    const LossAndGrads lg =
        mse_loss_and_grads(result.params, regression_batch(path, config.loss_kind, samples));
    if (!std::isfinite(lg.loss)) throw TrainingError("non-finite loss", step);
    if (step % kLossLogInterval == 0) result.history.push_back({step, lg.loss});
    adam_step(result.params, lg.grads, state, config);
  }
  result.steps = config.n_steps;
  return result;
}

LabeledField velocity_model(const MlpParams& params, LossKind kind, const GaussianPath& path,
                            const TimeClamp& clamp) {
  LabeledField net = as_labeled_field(params);
  if (kind == LossKind::kCfm) return net;
  LabeledField score = score_model(params, kind, path, clamp);
  return LabeledField{[score, path, clamp](std::span<const double> x, double t, Label y) {
                        const double tc = std::max(t, clamp.lower());
                        return score_to_velocity(path, x, tc, score(x, tc, y));
                      },
                      net.n_classes, net.dim};
}

LabeledField score_model(const MlpParams& params, LossKind kind, const GaussianPath& path,
                         const TimeClamp& clamp) {
  LabeledField net = as_labeled_field(params);
  switch (kind) {
    case LossKind::kCsm:
      return net;
    case LossKind::kDdpmEps:
      return LabeledField{[net, path, clamp](std::span<const double> x, double t, Label y) {
                            const double tc = std::min(t, clamp.upper());
                            return noise_to_score(path, tc, net(x, tc, y));
                          },
                          net.n_classes, net.dim};
    case LossKind::kCfm:
      return LabeledField{[net, path, clamp](std::span<const double> x, double t, Label y) {
                            const double tc = std::min(t, clamp.upper());
                            return velocity_to_score(path, x, tc, net(x, tc, y));
                          },
                          net.n_classes, net.dim};
  }
  throw DomainError("unknown loss kind");
}

}  // namespace flowlab
