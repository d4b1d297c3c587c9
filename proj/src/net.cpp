#include "flowlab/net.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "flowlab/error.hpp"
#include "flowlab/parallel.hpp"
#include "flowlab/rng.hpp"

namespace flowlab {

std::string_view to_string(Activation a) noexcept {
  return a == Activation::kTanh ? "tanh" : "silu";
}

Activation activation_from_string(std::string_view name) {
  if (name == "silu") return Activation::kSilu;
  if (name == "tanh") return Activation::kTanh;
  throw DomainError("unknown activation '" + std::string(name) + "'");
}

std::size_t MlpSpec::input_width() const noexcept {
  return dim + n_time_features + (conditional() ? embed_dim : 0);
}

void MlpSpec::validate() const {
  if (dim == 0) throw DomainError("network dimension must be positive");
  if (hidden.empty()) throw DomainError("network needs at least one hidden layer");
  for (std::size_t w : hidden) {
    if (w == 0) throw DomainError("hidden widths must be positive");
  }
  if (n_time_features % 2 != 0) throw DomainError("n_time_features must be even");
  if (n_classes < 0) throw DomainError("n_classes must be >= 0");
  if (conditional() && embed_dim == 0) throw DomainError("embed_dim must be positive");
}

std::vector<TensorSlot> parameter_layout(const MlpSpec& spec) {
  std::vector<TensorSlot> slots;
  std::size_t offset = 0;
  std::size_t fan_in = spec.input_width();
  const std::size_t n_layers = spec.hidden.size() + 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t fan_out = l < spec.hidden.size() ? spec.hidden[l] : spec.dim;
    const std::string prefix = "layer" + std::to_string(l);
    slots.push_back({prefix + ".weight", offset, fan_in, fan_out});
    offset += fan_in * fan_out;
    slots.push_back({prefix + ".bias", offset, 1, fan_out});
    offset += fan_out;
    fan_in = fan_out;
  }
  if (spec.conditional()) {
    const auto rows = static_cast<std::size_t>(spec.n_classes) + 1;
    slots.push_back({"label_embedding", offset, rows, spec.embed_dim});
  }
  return slots;
}

std::size_t MlpSpec::parameter_count() const {
  const auto slots = parameter_layout(*this);
  return slots.back().offset + slots.back().size();
}

MlpParams mlp_init(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  MlpParams params{spec, std::vector<double>(spec.parameter_count(), 0.0)};
  Rng rng(seed, 0x6d6c70ULL);
  for (const TensorSlot& slot : parameter_layout(spec)) {
    double scale = 0.0;
    if (slot.name.ends_with(".weight")) {
      scale = 1.0 / std::sqrt(static_cast<double>(slot.rows));
    } else if (slot.name == "label_embedding") {
      scale = 1.0;
    }
    if (scale == 0.0) continue;
    for (std::size_t k = 0; k < slot.size(); ++k) {
      params.values[slot.offset + k] = scale * rng.normal();
    }
  }
  return params;
}

void time_features(double t, std::span<double> out) {
  for (std::size_t j = 0; 2 * j < out.size(); ++j) {
    const double freq = std::ldexp(std::numbers::pi, static_cast<int>(j));
    out[2 * j] = std::sin(freq * t);
    out[2 * j + 1] = std::cos(freq * t);
  }
}

void check_label(const MlpSpec& spec, Label y) {
  if (!y) return;
  if (*y < 0 || *y >= spec.n_classes) {
    throw DomainError("label " + std::to_string(*y) + " out of range for a network with " +
                      std::to_string(spec.n_classes) + " classes");
  }
}

namespace {

struct LayerView {
  std::size_t weight;  // offset of (fan_in x fan_out) weights
  std::size_t bias;
  std::size_t fan_in;
  std::size_t fan_out;
};

struct Architecture {
  std::vector<LayerView> layers;
  std::size_t embedding = 0;

  explicit Architecture(const MlpSpec& spec) {
    const auto slots = parameter_layout(spec);
    for (std::size_t l = 0; l + 1 < slots.size() && slots[l].name != "label_embedding"; l += 2) {
      layers.push_back({slots[l].offset, slots[l + 1].offset, slots[l].rows, slots[l].cols});
    }
    if (spec.conditional()) embedding = slots.back().offset;
  }
};

template <class Real>
Real activate(Activation a, Real v) {
  if (a == Activation::kTanh) return std::tanh(v);
  return v / (Real(1) + std::exp(-v));
}

// Derivative expressed through the pre-activation.
inline double activate_grad(Activation a, double pre, double post) {
  if (a == Activation::kTanh) return 1.0 - post * post;
  const double sig = 1.0 / (1.0 + std::exp(-pre));
  return sig * (1.0 + pre * (1.0 - sig));
}

template <class Real>
struct Activations {
  std::vector<Real> input;
  std::vector<std::vector<Real>> pre;   // per hidden layer
  std::vector<std::vector<Real>> post;  // per hidden layer
  std::vector<Real> output;
};

template <class Real>
void build_input(const MlpSpec& spec, const Real* theta, std::size_t embedding,
                 std::span<const double> x, double t, Label y, std::vector<Real>& input) {
  input.resize(spec.input_width());
  for (std::size_t j = 0; j < spec.dim; ++j) input[j] = static_cast<Real>(x[j]);
  double feats[64];
  std::vector<double> heap;
  std::span<double> tf;
  if (spec.n_time_features <= 64) {
    tf = std::span<double>(feats, spec.n_time_features);
  } else {
    heap.resize(spec.n_time_features);
    tf = heap;
  }
  time_features(t, tf);
  for (std::size_t j = 0; j < spec.n_time_features; ++j) input[spec.dim + j] = static_cast<Real>(tf[j]);
  if (spec.conditional()) {
    const std::size_t row = y ? static_cast<std::size_t>(*y) : static_cast<std::size_t>(spec.n_classes);
    const Real* e = theta + embedding + row * spec.embed_dim;
    const std::size_t base = spec.dim + spec.n_time_features;
    for (std::size_t j = 0; j < spec.embed_dim; ++j) input[base + j] = e[j];
  }
}

// out = b + in . W with W row-major (fan_in x fan_out).
template <class Real>
void affine(const Real* theta, const LayerView& layer, const std::vector<Real>& in,
            std::vector<Real>& out) {
  out.assign(theta + layer.bias, theta + layer.bias + layer.fan_out);
  const Real* w = theta + layer.weight;
  for (std::size_t k = 0; k < layer.fan_in; ++k) {
    const Real hk = in[k];
    const Real* row = w + k * layer.fan_out;
    for (std::size_t o = 0; o < layer.fan_out; ++o) out[o] += hk * row[o];
  }
}

template <class Real>
void forward_pass(const MlpSpec& spec, const Architecture& arch, const Real* theta,
                  std::span<const double> x, double t, Label y, Activations<Real>& act) {
  build_input(spec, theta, arch.embedding, x, t, y, act.input);
  const std::size_t n_hidden = arch.layers.size() - 1;
  act.pre.resize(n_hidden);
  act.post.resize(n_hidden);
  const std::vector<Real>* in = &act.input;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    affine(theta, arch.layers[l], *in, act.pre[l]);
    act.post[l].resize(act.pre[l].size());
    for (std::size_t o = 0; o < act.pre[l].size(); ++o) {
      act.post[l][o] = activate(spec.activation, act.pre[l][o]);
    }
    in = &act.post[l];
  }
  affine(theta, arch.layers.back(), *in, act.output);
}

struct BackwardScratch {
  std::vector<double> delta;
  std::vector<double> delta_in;
};

// Accumulates d<upstream, output>/d theta into grad (if non-null) and returns
// the gradient w.r.t. the network input in scratch.delta_in.
void backward_pass(const MlpSpec& spec, const Architecture& arch, const double* theta,
                   const Activations<double>& act, Label y, std::span<const double> upstream,
                   double* grad, BackwardScratch& scratch) {
  scratch.delta.assign(upstream.begin(), upstream.end());
  for (std::size_t l = arch.layers.size(); l-- > 0;) {
    const LayerView& layer = arch.layers[l];
    const std::vector<double>& in = l == 0 ? act.input : act.post[l - 1];
    const double* w = theta + layer.weight;
    if (grad != nullptr) {
      double* gb = grad + layer.bias;
      for (std::size_t o = 0; o < layer.fan_out; ++o) gb[o] += scratch.delta[o];
      double* gw = grad + layer.weight;
      for (std::size_t k = 0; k < layer.fan_in; ++k) {
        const double hk = in[k];
        double* row = gw + k * layer.fan_out;
        for (std::size_t o = 0; o < layer.fan_out; ++o) row[o] += hk * scratch.delta[o];
      }
    }
    scratch.delta_in.assign(layer.fan_in, 0.0);
    for (std::size_t k = 0; k < layer.fan_in; ++k) {
      const double* row = w + k * layer.fan_out;
      double acc = 0.0;
      for (std::size_t o = 0; o < layer.fan_out; ++o) acc += row[o] * scratch.delta[o];
      scratch.delta_in[k] = acc;
    }
    if (l > 0) {
      const std::vector<double>& pre = act.pre[l - 1];
      const std::vector<double>& post = act.post[l - 1];
      for (std::size_t k = 0; k < layer.fan_in; ++k) {
        scratch.delta_in[k] *= activate_grad(spec.activation, pre[k], post[k]);
      }
      std::swap(scratch.delta, scratch.delta_in);
    }
  }
  if (grad != nullptr && spec.conditional()) {
    const std::size_t row = y ? static_cast<std::size_t>(*y) : static_cast<std::size_t>(spec.n_classes);
    double* ge = grad + arch.embedding + row * spec.embed_dim;
    const std::size_t base = spec.dim + spec.n_time_features;
    for (std::size_t j = 0; j < spec.embed_dim; ++j) ge[j] += scratch.delta_in[base + j];
  }
}

void check_params(const MlpParams& params) {
  if (params.values.size() != params.spec.parameter_count()) {
    throw DomainError("parameter vector does not match the network spec");
  }
}

void check_batch(const MlpParams& params, const TrainingBatch& batch) {
  if (batch.size() == 0) throw DomainError("empty training batch");
  if (batch.dim != params.spec.dim) throw DomainError("batch dimension does not match network");
  for (double v : batch.target) {
    if (!std::isfinite(v)) throw DomainError("non-finite regression target");
  }
  for (double t : batch.t) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("batch time outside [0, 1]");
  }
  for (const Label& y : batch.labels) check_label(params.spec, y);
}

// Loss and gradient contributions of items [begin, end), both scaled by 1/n.
double accumulate_items(const MlpParams& params, const Architecture& arch,
                        const TrainingBatch& batch, std::size_t begin, std::size_t end,
                        double* grad) {
  const MlpSpec& spec = params.spec;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Activations<double> act;
  BackwardScratch scratch;
  std::vector<double> upstream(spec.dim);
  double loss = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    forward_pass(spec, arch, params.values.data(), batch.x_at(i), batch.t[i], batch.labels[i], act);
    const auto target = batch.target_at(i);
    double sq = 0.0;
    for (std::size_t j = 0; j < spec.dim; ++j) {
      const double r = act.output[j] - target[j];
      sq += r * r;
      upstream[j] = 2.0 * r * inv_n;
    }
    loss += sq;
    backward_pass(spec, arch, params.values.data(), act, batch.labels[i], upstream, grad, scratch);
  }
  return loss * inv_n;
}

}  // namespace

Vector forward(const MlpParams& params, std::span<const double> x, double t, Label y) {
  check_params(params);
  if (x.size() != params.spec.dim) throw DomainError("input dimension does not match network");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("network time outside [0, 1]");
  check_label(params.spec, y);
  const Architecture arch(params.spec);
  Activations<double> act;
  forward_pass(params.spec, arch, params.values.data(), x, t, y, act);
  return std::move(act.output);
}

Vector input_gradient(const MlpParams& params, std::span<const double> x, double t, Label y,
                      std::span<const double> cotangent) {
  check_params(params);
  if (x.size() != params.spec.dim || cotangent.size() != params.spec.dim) {
    throw DomainError("input/cotangent dimension does not match network");
  }
  check_label(params.spec, y);
  const Architecture arch(params.spec);
  Activations<double> act;
  forward_pass(params.spec, arch, params.values.data(), x, t, y, act);
  BackwardScratch scratch;
  backward_pass(params.spec, arch, params.values.data(), act, y, cotangent, nullptr, scratch);
  return Vector(scratch.delta_in.begin(), scratch.delta_in.begin() + params.spec.dim);
}

void TrainingBatch::push(std::span<const double> xi, double ti, Label yi,
                         std::span<const double> target_i) {
  if (xi.size() != dim || target_i.size() != dim) throw DomainError("batch item dimension mismatch");
  x.insert(x.end(), xi.begin(), xi.end());
  t.push_back(ti);
  labels.push_back(yi);
  target.insert(target.end(), target_i.begin(), target_i.end());
}

LossAndGrads mse_loss_and_grads_serial(const MlpParams& params, const TrainingBatch& batch) {
  check_params(params);
  check_batch(params, batch);
  const Architecture arch(params.spec);
  LossAndGrads out{0.0, GradSet{std::vector<double>(params.values.size(), 0.0)}};
  out.loss = accumulate_items(params, arch, batch, 0, batch.size(), out.grads.values.data());
  return out;
}

LossAndGrads mse_loss_and_grads(const MlpParams& params, const TrainingBatch& batch) {
  check_params(params);
  check_batch(params, batch);
  const Architecture arch(params.spec);
  const std::size_t n = batch.size();
  const std::size_t n_chunks = chunk_count(n);
  const std::size_t p = params.values.size();
  std::vector<double> chunk_grads(n_chunks * p, 0.0);
  std::vector<double> chunk_loss(n_chunks, 0.0);
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t begin = c * kReductionChunk;
    const std::size_t end = std::min(n, begin + kReductionChunk);
    chunk_loss[c] = accumulate_items(params, arch, batch, begin, end, chunk_grads.data() + c * p);
  });
  LossAndGrads out{0.0, GradSet{std::vector<double>(p, 0.0)}};
  for (std::size_t c = 0; c < n_chunks; ++c) {
    out.loss += chunk_loss[c];
    const double* g = chunk_grads.data() + c * p;
    for (std::size_t k = 0; k < p; ++k) out.grads.values[k] += g[k];
  }
  return out;
}

long double mse_loss_extended(const MlpSpec& spec, std::span<const long double> theta,
                              const TrainingBatch& batch) {
  const Architecture arch(spec);
  Activations<long double> act;
  long double loss = 0.0L;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward_pass(spec, arch, theta.data(), batch.x_at(i), batch.t[i], batch.labels[i], act);
    const auto target = batch.target_at(i);
    for (std::size_t j = 0; j < spec.dim; ++j) {
      const long double r = act.output[j] - static_cast<long double>(target[j]);
      loss += r * r;
    }
  }
  return loss / static_cast<long double>(batch.size());
}

GradCheckReport grad_check(const MlpParams& params, const TrainingBatch& batch,
                           const GradSet& grads, double tolerance) {
  check_params(params);
  check_batch(params, batch);
  if (grads.values.size() != params.values.size()) {
    throw DomainError("gradient set does not match parameters");
  }
  std::vector<long double> theta(params.values.begin(), params.values.end());
  GradCheckReport report;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const long double original = theta[k];
    const long double h = 1e-6L * (1.0L + std::abs(original));
    theta[k] = original + h;
    const long double up = mse_loss_extended(params.spec, theta, batch);
    theta[k] = original - h;
    const long double down = mse_loss_extended(params.spec, theta, batch);
    theta[k] = original;
    const double numeric = static_cast<double>((up - down) / (2.0L * h));
    const double analytic = grads.values[k];
    const double err = std::abs(analytic - numeric) / (std::abs(numeric) + 1e-8);
    if (k == 0 || err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_index = k;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

GradCheckReport grad_check(const MlpParams& params, const TrainingBatch& batch, double tolerance) {
  return grad_check(params, batch, mse_loss_and_grads(params, batch).grads, tolerance);
}

LabeledField as_labeled_field(MlpParams params) {
  check_params(params);
  auto shared = std::make_shared<const MlpParams>(std::move(params));
  const int n_classes = shared->spec.n_classes;
  const std::size_t dim = shared->spec.dim;
  return LabeledField{[shared](std::span<const double> x, double t, Label y) {
                        return forward(*shared, x, t, y);
                      },
                      n_classes, dim};
}

FieldFunction as_field(MlpParams params, Label y) {
  check_params(params);
  check_label(params.spec, y);
  auto shared = std::make_shared<const MlpParams>(std::move(params));
  return [shared, y](std::span<const double> x, double t) { return forward(*shared, x, t, y); };
}

}  // namespace flowlab
