#include "flowlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "flowlab/data_eval.hpp"
#include "flowlab/dynamics.hpp"
#include "flowlab/error.hpp"
#include "flowlab/guidance.hpp"
#include "flowlab/io.hpp"
#include "flowlab/net.hpp"
#include "flowlab/oracle.hpp"
#include "flowlab/parallel.hpp"
#include "flowlab/paths.hpp"
#include "flowlab/train.hpp"
#include "json.hpp"

namespace flowlab {

OutputFormat output_format_from_string(std::string_view name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "csv+ppm") return OutputFormat::kCsvPpm;
  throw DomainError("unknown output format '" + std::string(name) + "'");
}

std::string_view to_string(Sampler s) noexcept {
  switch (s) {
    case Sampler::kEuler: return "euler";
    case Sampler::kHeun: return "heun";
    case Sampler::kEulerMaruyama: return "em";
  }
  return "?";
}

Sampler sampler_from_string(std::string_view name) {
  if (name == "euler") return Sampler::kEuler;
  if (name == "heun") return Sampler::kHeun;
  if (name == "em") return Sampler::kEulerMaruyama;
  throw DomainError("unknown sampler '" + std::string(name) + "'");
}

std::string_view to_string(ValidateSuite s) noexcept {
  switch (s) {
    case ValidateSuite::kGradCheck: return "gradcheck";
    case ValidateSuite::kContinuity: return "continuity";
    case ValidateSuite::kFokkerPlanck: return "fokker-planck";
    case ValidateSuite::kConversion: return "conversion";
    case ValidateSuite::kLossGap: return "loss-gap";
    case ValidateSuite::kIntegratorOrder: return "integrator-order";
  }
  return "?";
}

ValidateSuite validate_suite_from_string(std::string_view name) {
  for (auto s : {ValidateSuite::kGradCheck, ValidateSuite::kContinuity, ValidateSuite::kFokkerPlanck,
                 ValidateSuite::kConversion, ValidateSuite::kLossGap,
                 ValidateSuite::kIntegratorOrder}) {
    if (to_string(s) == name) return s;
  }
  throw DomainError("unknown suite '" + std::string(name) + "'");
}

namespace {

template <class Fn>
ExitCode guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return ExitCode::kConfigError;
  } catch (const TrainingError& e) {
    log << "training diverged: " << e.what() << '\n';
    return ExitCode::kDivergence;
  } catch (const SimulationError& e) {
    log << "simulation diverged at t=" << format_double(e.time()) << ": " << e.what() << '\n';
    return ExitCode::kDivergence;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return ExitCode::kConfigError;
  }
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw ConfigError("out", "cannot create directory " + dir.string());
  }
}

std::filesystem::path resolve_out(const std::optional<std::filesystem::path>& flag,
                                  const std::string& from_config) {
  if (flag) return *flag;
  if (!from_config.empty()) return from_config;
  return ".";
}

}  // namespace

// ---- train -------------------------------------------------------------------

ExitCode cmd_train(const TrainOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    RunConfig cfg = load_run_config(opts.config);
    if (opts.seed) cfg.train.seed = *opts.seed;
    const auto out = resolve_out(opts.out_dir, cfg.out_dir);
    ensure_dir(out);

    const Dataset data = make_dataset(cfg.dataset);
    if (cfg.model.conditional()) {
      if (data.n_classes() > cfg.model.n_classes) {
        throw ConfigError("model.n_classes", "dataset has " + std::to_string(data.n_classes()) +
                                                 " classes");
      }
    }
    TrainResult result = train(cfg.train, data, cfg.model);

    Checkpoint ck;
    ck.params = std::move(result.params);
    ck.schedule = cfg.train.schedule;
    ck.loss_kind = cfg.train.loss_kind;
    ck.label_drop_eta = cfg.model.conditional() ? cfg.train.label_drop_eta : 0.0;
    ck.t_clamp = cfg.train.t_clamp;
    ck.seed = cfg.train.seed;
    ck.steps = result.steps;
    save_checkpoint(out / "checkpoint.json", ck);
    write_loss_history_csv(out / "loss.csv", result.history);
    if (!result.history.empty()) {
      log << "trained " << result.steps << " steps, last logged loss "
          << format_double(result.history.back().loss) << '\n';
    }
    return ExitCode::kOk;
  });
}

// ---- sample ------------------------------------------------------------------

ExitCode cmd_sample(const SampleOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    const Checkpoint ck = load_checkpoint(opts.checkpoint);
    const MlpSpec& spec = ck.params.spec;
    if (opts.steps < 1) throw ConfigError("steps", "must be >= 1");
    if (opts.sampler == Sampler::kEulerMaruyama && !(opts.sigma >= 0.0)) {
      throw ConfigError("sigma", "must be >= 0");
    }
    if (opts.w && !opts.label) throw ConfigError("w", "a guidance scale needs --label");
    if (opts.label) {
      if (!spec.conditional()) throw ConfigError("label", "model is unconditional");
      if (*opts.label < 0 || *opts.label >= spec.n_classes) {
        throw ConfigError("label", "out of range [0, " + std::to_string(spec.n_classes) + ")");
      }
    } else if (spec.conditional() && ck.label_drop_eta == 0.0) {
      throw ConfigError("label", "model was trained without a null label; pass --label");
    }
    const double w = opts.w.value_or(1.0);
    if (opts.w && !std::isfinite(w)) throw ConfigError("w", "must be finite");
    if (w != 1.0 && ck.label_drop_eta == 0.0) {
      throw ConfigError("w", "guidance needs a model trained with label dropping");
    }

    const GaussianPath path{NoiseSchedule{ck.schedule}, spec.dim};
    const LabeledField velocity = velocity_model(ck.params, ck.loss_kind, path, ck.t_clamp);
    const Label y = opts.label;
    const FieldFunction u = [velocity, y, w](std::span<const double> x, double t) {
      return y ? guided_velocity(velocity, x, t, *y, w) : velocity(x, t, kNullLabel);
    };
    const TimeGrid grid{opts.steps, 0.0, 1.0};

    std::vector<Vector> samples;
    if (opts.sampler == Sampler::kEulerMaruyama) {
      const LabeledField score = score_model(ck.params, ck.loss_kind, path, ck.t_clamp);
      const FieldFunction s = [score, y, w](std::span<const double> x, double t) {
        return y ? guided_score(score, x, t, *y, w) : score(x, t, kNullLabel);
      };
      const auto sigma =
          opts.sigma == 0.0 ? DiffusionCoefficient::zero() : DiffusionCoefficient::constant(opts.sigma);
      samples = sample_sde(u, s, sigma, grid, spec.dim, opts.n, opts.seed);
    } else {
      BatchSimulation sim;
      sim.integrator = opts.sampler == Sampler::kHeun ? Integrator::kHeun : Integrator::kEuler;
      sim.field = u;
      sim.grid = grid;
      sim.dim = spec.dim;
      samples = simulate_batch(sim, opts.n, opts.seed);
    }

    ensure_dir(opts.out_dir);
    std::optional<double> w_col;
    if (y) w_col = w;
    write_samples_csv(opts.out_dir / "samples.csv", samples, y, w_col);
    if (opts.format == OutputFormat::kCsvPpm) {
      if (spec.dim != 2) throw ConfigError("format", "images need a 2D model");
      write_scatter_ppm(opts.out_dir / "samples.ppm", samples, {-3.0, 3.0, -3.0, 3.0});
    }
    log << "wrote " << samples.size() << " samples\n";
    return ExitCode::kOk;
  });
}

// ---- validate ----------------------------------------------------------------

namespace {

struct CheckRow {
  std::string check;
  std::string probe;
  double value;
  double threshold;
  bool pass;
};

CheckRow below(std::string check, std::string probe, double value, double threshold) {
  return {std::move(check), std::move(probe), value, threshold,
          std::isfinite(value) && value < threshold};
}

void write_report(const std::filesystem::path& file, const std::vector<CheckRow>& rows) {
  std::string out = "check,probe,value,threshold,pass\n";
  for (const auto& r : rows) {
    out += r.check + ',' + r.probe + ',' + format_double(r.value) + ',' +
           format_double(r.threshold) + ',' + (r.pass ? "true" : "false") + '\n';
  }
  write_text_file(file, out);
}

TrainingBatch random_batch(const MlpSpec& spec, std::size_t n, Rng& rng) {
  TrainingBatch batch(spec.dim);
  Vector x(spec.dim), target(spec.dim);
  for (std::size_t i = 0; i < n; ++i) {
    rng.fill_normal(x);
    rng.fill_normal(target);
    const double t = rng.uniform();
    Label y = kNullLabel;
    if (spec.conditional()) {
      const auto pick = rng.below(static_cast<std::uint64_t>(spec.n_classes) + 1);
      if (pick < static_cast<std::uint64_t>(spec.n_classes)) y = static_cast<int>(pick);
    }
    batch.push(x, t, y, target);
  }
  return batch;
}

constexpr double kGradTolerance = 1e-5;
constexpr std::size_t kGradProbes = 5;

std::vector<CheckRow> suite_gradcheck(const std::optional<Checkpoint>& ck, std::uint64_t seed) {
  std::vector<CheckRow> rows;
  auto run = [&](const MlpParams& params, const std::string& tag, std::uint64_t stream) {
    Rng rng(seed, stream);
    for (std::size_t p = 0; p < kGradProbes; ++p) {
      const TrainingBatch batch = random_batch(params.spec, 4, rng);
      const GradCheckReport rep = grad_check(params, batch, kGradTolerance);
      rows.push_back(below("gradcheck", tag + "/" + std::to_string(p), rep.max_relative_error,
                           kGradTolerance));
    }
  };
  if (ck) {
    run(ck->params, "checkpoint", 0);
    return rows;
  }
  std::uint64_t stream = 0;
  for (Activation act : {Activation::kSilu, Activation::kTanh}) {
    for (int classes : {0, 3}) {
      MlpSpec spec;
      spec.hidden = {16, 16, 16};
      spec.activation = act;
      spec.n_classes = classes;
      spec.embed_dim = 4;
      const std::string tag =
          std::string(to_string(act)) + (classes > 0 ? "/labeled" : "/unlabeled");
      run(mlp_init(spec, seed + stream), tag, stream);
      ++stream;
    }
  }
  return rows;
}

constexpr double kConversionTolerance = 1e-12;

// Max over a 19 x 61 grid of |a - b| / (1 + |b|).
std::vector<CheckRow> suite_conversion() {
  std::vector<CheckRow> rows;
  const Dataset data = Dataset::uniform({{-1.0}, {0.5}, {2.0}});
  for (ScheduleKind kind : {ScheduleKind::kCondOT, ScheduleKind::kTrig}) {
    const GaussianPath path{NoiseSchedule{kind}, 1};
    double cond_s2u = 0.0, cond_u2s = 0.0, marg_s2u = 0.0, marg_u2s = 0.0;
    const Vector z{0.7};
    auto rel = [](double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); };
    for (int it = 1; it <= 19; ++it) {
      const double t = 0.05 * it;
      for (int ix = 0; ix <= 60; ++ix) {
        const Vector x{-3.0 + 0.1 * ix};
        const Vector u = cond_vector_field(path, x, z, t);
        const Vector s = cond_score(path, x, z, t);
        cond_s2u = std::max(cond_s2u, rel(score_to_velocity(path, x, t, s)[0], u[0]));
        cond_u2s = std::max(cond_u2s, rel(velocity_to_score(path, x, t, u)[0], s[0]));
        const Vector mu = marginal_vector_field(path, data, x, t);
        const Vector ms = marginal_score(path, data, x, t);
        marg_s2u = std::max(marg_s2u, rel(score_to_velocity(path, x, t, ms)[0], mu[0]));
        marg_u2s = std::max(marg_u2s, rel(velocity_to_score(path, x, t, mu)[0], ms[0]));
      }
    }
    const std::string sched(to_string(kind));
    rows.push_back(below("score_to_velocity", sched + "/conditional", cond_s2u, kConversionTolerance));
    rows.push_back(below("velocity_to_score", sched + "/conditional", cond_u2s, kConversionTolerance));
    rows.push_back(below("score_to_velocity", sched + "/marginal", marg_s2u, kConversionTolerance));
    rows.push_back(below("velocity_to_score", sched + "/marginal", marg_u2s, kConversionTolerance));
  }
  return rows;
}

constexpr double kResidualTolerance = 1e-4;
constexpr std::size_t kResidualProbes = 100;
constexpr double kProbeTMin = 0.05;
constexpr double kProbeTMax = 0.8;

Dataset three_point_dataset() {
  return Dataset::uniform({{-1.0, 0.0}, {1.0, 0.5}, {0.0, -1.0}});
}

std::vector<ProbePoint> residual_probes(const GaussianPath& path, const Dataset& data,
                                        std::uint64_t seed) {
  Rng rng(seed, 0x7072);
  return mass_weighted_probes(path, data, kResidualProbes, kProbeTMin, kProbeTMax, rng);
}

void append_report(std::vector<CheckRow>& rows, const std::string& check,
                   const ResidualReport& report) {
  for (std::size_t i = 0; i < report.residuals.size(); ++i) {
    rows.push_back(below(check, std::to_string(i), std::abs(report.residuals[i]), kResidualTolerance));
  }
}

// Max residual with coarse steps over max residual with quartered steps; pure
// truncation error gives 16.
CheckRow convergence_row(const std::string& check, const DensityFunction& density,
                         const FieldFunction& field, const std::function<double(double)>& sigma,
                         std::span<const ProbePoint> probes) {
  const FdSteps coarse{1e-2, 1e-2};
  const FdSteps fine{2.5e-3, 2.5e-3};
  const double a = residual_report(density, field, sigma, probes, coarse).max_abs_residual;
  const double b = residual_report(density, field, sigma, probes, fine).max_abs_residual;
  const double ratio = a / b;
  return {check, "fd-step-ratio", ratio, 16.0, std::isfinite(ratio) && ratio >= 8.0 && ratio <= 32.0};
}

std::vector<CheckRow> suite_continuity(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  const GaussianPath path{NoiseSchedule{ScheduleKind::kCondOT}, 2};
  const Dataset data = three_point_dataset();
  const auto probes = residual_probes(path, data, seed);

  const Vector z = data.points[0];
  const DensityFunction cond_density = [path, z](std::span<const double> x, double t) {
    return std::exp(cond_log_density(path, x, z, t));
  };
  const FieldFunction cond_field = [path, z](std::span<const double> x, double t) {
    return cond_vector_field(path, x, z, t);
  };
  // Probes for the conditional pair come from p_t(.|z) itself.
  Rng rng(seed, 0x636f6e64);
  const auto cond_probes =
      mass_weighted_probes(path, Dataset::uniform({z}), kResidualProbes, kProbeTMin, kProbeTMax, rng);
  append_report(rows, "continuity/conditional",
                residual_report(cond_density, cond_field, nullptr, cond_probes));

  const auto density = marginal_density_function(path, data);
  const auto field = marginal_field_function(path, data);
  append_report(rows, "continuity/marginal", residual_report(density, field, nullptr, probes));
  rows.push_back(convergence_row("continuity/marginal", density, field, nullptr, probes));
  return rows;
}

std::vector<CheckRow> suite_fokker_planck(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  const GaussianPath path{NoiseSchedule{ScheduleKind::kCondOT}, 2};
  const Dataset data = three_point_dataset();
  const auto probes = residual_probes(path, data, seed);
  const auto density = marginal_density_function(path, data);
  for (double sigma : {0.0, 0.5, 1.0}) {
    const auto field = sde_extension_field(path, data, sigma);
    const std::function<double(double)> sig = [sigma](double) { return sigma; };
    const std::string check = "fokker-planck/sigma=" + format_double(sigma);
    append_report(rows, check, residual_report(density, field, sig, probes));
    rows.push_back(convergence_row(check, density, field, sig, probes));
  }
  return rows;
}

constexpr double kLossGapTolerance = 1e-4;

std::vector<CheckRow> suite_loss_gap(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  const GaussianPath path{NoiseSchedule{ScheduleKind::kCondOT}, 1};
  const Dataset data = Dataset::uniform({{-1.0}, {1.0}});
  MlpSpec spec;
  spec.dim = 1;
  spec.hidden = {16, 16};
  std::vector<FieldFunction> fields;
  for (std::uint64_t k = 0; k < 3; ++k) fields.push_back(as_field(mlp_init(spec, seed + 101 + k)));
  const FieldFunction oracle = marginal_field_function(path, data);

  const LossGap g01 = loss_gap_probe(path, data, fields[0], fields[1]);
  const LossGap g2o = loss_gap_probe(path, data, fields[2], oracle);
  const double gaps[] = {g01.gap_a(), g01.gap_b(), g2o.gap_a()};
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      rows.push_back(below("loss-gap", "net" + std::to_string(i) + "-vs-net" + std::to_string(j),
                           std::abs(gaps[i] - gaps[j]), kLossGapTolerance));
    }
  }
  rows.push_back(below("loss-gap", "oracle-fm-loss", std::abs(g2o.fm_b), kLossGapTolerance));
  rows.push_back(below("loss-gap", "oracle-vs-net0", std::abs(g2o.gap_b() - gaps[0]),
                       kLossGapTolerance));
  return rows;
}

std::vector<CheckRow> suite_integrator_order() {
  const FieldFunction decay = [](std::span<const double> x, double) { return Vector{-x[0]}; };
  const double exact = std::exp(-1.0);
  const std::size_t steps[] = {10, 20, 40, 80};
  auto fitted_order = [&](bool heun) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t n : steps) {
      const TimeGrid grid{n, 0.0, 1.0};
      const Vector x0{1.0};
      const Trajectory tr = heun ? simulate_heun(decay, x0, grid, Record::kTerminal)
                                 : simulate_euler(decay, x0, grid, Record::kTerminal);
      const double lx = std::log(grid.step());
      const double ly = std::log(std::abs(tr.terminal()[0] - exact));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double m = static_cast<double>(std::size(steps));
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  const double euler = fitted_order(false);
  const double heun = fitted_order(true);
  return {{"integrator-order", "euler", euler, 1.0, euler >= 0.8 && euler <= 1.2},
          {"integrator-order", "heun", heun, 2.0, heun >= 1.7 && heun <= 2.3}};
}

}  // namespace

ExitCode cmd_validate(const ValidateOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    std::optional<Checkpoint> ck;
    if (opts.checkpoint) ck = load_checkpoint(*opts.checkpoint);
    std::vector<CheckRow> rows;
    switch (opts.suite) {
      case ValidateSuite::kGradCheck: rows = suite_gradcheck(ck, opts.seed); break;
      case ValidateSuite::kContinuity: rows = suite_continuity(opts.seed); break;
      case ValidateSuite::kFokkerPlanck: rows = suite_fokker_planck(opts.seed); break;
      case ValidateSuite::kConversion: rows = suite_conversion(); break;
      case ValidateSuite::kLossGap: rows = suite_loss_gap(opts.seed); break;
      case ValidateSuite::kIntegratorOrder: rows = suite_integrator_order(); break;
    }
    ensure_dir(opts.out_dir);
    write_report(opts.out_dir / ("validate_" + std::string(to_string(opts.suite)) + ".csv"), rows);
    const auto failed = std::count_if(rows.begin(), rows.end(), [](const CheckRow& r) { return !r.pass; });
    log << to_string(opts.suite) << ": " << rows.size() - static_cast<std::size_t>(failed) << "/"
        << rows.size() << " checks passed\n";
    return failed == 0 ? ExitCode::kOk : ExitCode::kValidationFailure;
  });
}

// ---- export-path -------------------------------------------------------------

ExitCode cmd_export_path(const ExportPathOptions& opts, std::ostream& log) {
  return guarded(log, [&] {
    RunConfig cfg = load_run_config(opts.config);
    if (opts.times) {
      for (double t : *opts.times) {
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("times", "times must lie in [0, 1]");
      }
      cfg.export_path.times = *opts.times;
    }
    const std::uint64_t seed = opts.seed.value_or(cfg.train.seed);
    const auto out = resolve_out(opts.out_dir, cfg.out_dir);
    ensure_dir(out);

    const Dataset data = make_dataset(cfg.dataset);
    const GaussianPath path{NoiseSchedule{cfg.train.schedule}, data.dim};
    const auto& ec = cfg.export_path;

    nlohmann::json summary;
    summary["schedule"] = std::string(to_string(cfg.train.schedule));
    summary["dataset"] = std::string(to_string(cfg.dataset.kind));
    summary["n_samples"] = ec.n_samples;
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t k = 0; k < ec.times.size(); ++k) {
      const double t = ec.times[k];
      Rng rng(seed, k);
      std::vector<Vector> samples(ec.n_samples);
      for (auto& x : samples) {
        const std::size_t i = static_cast<std::size_t>(rng.below(data.size()));
        x = cond_sample(path, data.points[i], t, rng);
      }
      const std::string tag = std::to_string(k);
      write_samples_csv(out / ("path_" + tag + ".csv"), samples);
      const Histogram2D hist = histogram2d(samples, ec.bounds, ec.bins, ec.bins);
      write_histogram_csv(out / ("hist_" + tag + ".csv"), hist);
      if (opts.format == OutputFormat::kCsvPpm) write_heatmap_ppm(out / ("hist_" + tag + ".ppm"), hist);

      Vector mean(data.dim, 0.0), var(data.dim, 0.0);
      for (const auto& x : samples) {
        for (std::size_t j = 0; j < data.dim; ++j) mean[j] += x[j];
      }
      const double n = static_cast<double>(std::max<std::size_t>(samples.size(), 1));
      for (double& m : mean) m /= n;
      for (const auto& x : samples) {
        for (std::size_t j = 0; j < data.dim; ++j) var[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
      }
      for (double& v : var) v /= n;
      entries.push_back({{"index", k},
                         {"t", t},
                         {"samples", "path_" + tag + ".csv"},
                         {"histogram", "hist_" + tag + ".csv"},
                         {"mean", mean},
                         {"variance", var},
                         {"out_of_bounds", hist.out_of_bounds}});
    }
    summary["times"] = entries;
    write_text_file(out / "path_summary.json", summary.dump(2) + "\n");
    log << "exported " << ec.times.size() << " time slices\n";
    return ExitCode::kOk;
  });
}

// ---- argv --------------------------------------------------------------------

int run_cli(int argc, char** argv) {
  configure_threads_from_env();
  CLI::App app{"Flow matching and diffusion toolkit"};
  app.require_subcommand(1);

  std::string format = "csv";
  std::string out;
  std::uint64_t seed = 0;

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train a network from a JSON run config");
  train_cmd->add_option("--config", train_opts.config, "Run config")->required();
  train_cmd->add_option("--out", out, "Output directory");
  train_cmd->add_option("--seed", seed, "Training seed");

  SampleOptions sample_opts;
  std::string sampler = "euler";
  std::optional<int> label;
  std::optional<double> w;
  auto* sample_cmd = app.add_subcommand("sample", "Draw samples from a checkpoint");
  sample_cmd->add_option("--checkpoint", sample_opts.checkpoint, "Checkpoint JSON")->required();
  sample_cmd->add_option("--sampler", sampler, "euler | heun | em");
  sample_cmd->add_option("--n", sample_opts.n, "Number of samples");
  sample_cmd->add_option("--steps", sample_opts.steps, "Integration steps");
  sample_cmd->add_option("--sigma", sample_opts.sigma, "Diffusion coefficient (em)");
  sample_cmd->add_option("--label", label, "Class label");
  sample_cmd->add_option("--w", w, "Guidance scale");
  sample_cmd->add_option("--out", out, "Output directory");
  sample_cmd->add_option("--seed", seed, "Sampling seed");
  sample_cmd->add_option("--format", format, "csv | csv+ppm");

  ValidateOptions validate_opts;
  std::string suite;
  std::string checkpoint;
  auto* validate_cmd = app.add_subcommand("validate", "Run a numerical validation suite");
  validate_cmd
      ->add_option("--suite", suite,
                   "gradcheck | continuity | fokker-planck | conversion | loss-gap | integrator-order")
      ->required();
  validate_cmd->add_option("--checkpoint", checkpoint, "Checkpoint for gradcheck");
  validate_cmd->add_option("--out", out, "Output directory");
  validate_cmd->add_option("--seed", seed, "Probe seed");

  ExportPathOptions export_opts;
  std::vector<double> times;
  auto* export_cmd = app.add_subcommand("export-path", "Export samples along the probability path");
  export_cmd->add_option("--config", export_opts.config, "Run config")->required();
  export_cmd->add_option("--times", times, "Times in [0, 1]")->delimiter(',');
  export_cmd->add_option("--out", out, "Output directory");
  export_cmd->add_option("--seed", seed, "Sampling seed");
  export_cmd->add_option("--format", format, "csv | csv+ppm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfigError);
  }

  auto fmt = [&]() -> std::optional<OutputFormat> {
    try {
      return output_format_from_string(format);
    } catch (const std::exception& e) {
      std::cerr << "config error: format: " << e.what() << '\n';
      return std::nullopt;
    }
  };

  ExitCode code = ExitCode::kOk;
  if (*train_cmd) {
    if (!out.empty()) train_opts.out_dir = out;
    if (train_cmd->count("--seed")) train_opts.seed = seed;
    code = cmd_train(train_opts, std::cerr);
  } else if (*sample_cmd) {
    auto f = fmt();
    if (!f) return static_cast<int>(ExitCode::kConfigError);
    try {
      sample_opts.sampler = sampler_from_string(sampler);
    } catch (const std::exception& e) {
      std::cerr << "config error: sampler: " << e.what() << '\n';
      return static_cast<int>(ExitCode::kConfigError);
    }
    sample_opts.format = *f;
    sample_opts.label = label;
    sample_opts.w = w;
    sample_opts.seed = seed;
    if (!out.empty()) sample_opts.out_dir = out;
    code = cmd_sample(sample_opts, std::cerr);
  } else if (*validate_cmd) {
    try {
      validate_opts.suite = validate_suite_from_string(suite);
    } catch (const std::exception& e) {
      std::cerr << "config error: suite: " << e.what() << '\n';
      return static_cast<int>(ExitCode::kConfigError);
    }
    if (!checkpoint.empty()) validate_opts.checkpoint = checkpoint;
    validate_opts.seed = seed;
    if (!out.empty()) validate_opts.out_dir = out;
    code = cmd_validate(validate_opts, std::cerr);
  } else if (*export_cmd) {
    auto f = fmt();
    if (!f) return static_cast<int>(ExitCode::kConfigError);
    export_opts.format = *f;
    if (!times.empty()) export_opts.times = times;
    if (export_cmd->count("--seed")) export_opts.seed = seed;
    if (!out.empty()) export_opts.out_dir = out;
    code = cmd_export_path(export_opts, std::cerr);
  }
  return static_cast<int>(code);
}

}  // namespace flowlab
