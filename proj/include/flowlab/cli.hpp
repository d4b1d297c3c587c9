#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowlab {

/// Process exit status. Stable contract.
enum class ExitCode : int {
  kOk = 0,
  kValidationFailure = 1,
  kConfigError = 2,
  kDivergence = 3,
};

enum class OutputFormat { kCsv, kCsvPpm };
OutputFormat output_format_from_string(std::string_view name);

enum class Sampler { kEuler, kHeun, kEulerMaruyama };
std::string_view to_string(Sampler s) noexcept;
Sampler sampler_from_string(std::string_view name);

enum class ValidateSuite { kGradCheck, kContinuity, kFokkerPlanck, kConversion, kLossGap, kIntegratorOrder };
std::string_view to_string(ValidateSuite s) noexcept;
ValidateSuite validate_suite_from_string(std::string_view name);

struct TrainOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out_dir;  // overrides the config's "out"
  std::optional<std::uint64_t> seed;             // overrides train.seed
};

/// Writes checkpoint.json and loss.csv.
ExitCode cmd_train(const TrainOptions& opts, std::ostream& log);

struct SampleOptions {
  std::filesystem::path checkpoint;
  Sampler sampler = Sampler::kEuler;
  std::size_t n = 4096;
  std::size_t steps = 100;
  double sigma = 0.0;
  std::optional<int> label;
  std::optional<double> w;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  OutputFormat format = OutputFormat::kCsv;
};

/// Writes samples.csv (and samples.ppm for csv+ppm).
ExitCode cmd_sample(const SampleOptions& opts, std::ostream& log);

struct ValidateOptions {
  ValidateSuite suite = ValidateSuite::kConversion;
  std::optional<std::filesystem::path> checkpoint;  // gradcheck only
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
};

/// One row per check in validate_<suite>.csv: check,probe,value,threshold,pass.
ExitCode cmd_validate(const ValidateOptions& opts, std::ostream& log);

struct ExportPathOptions {
  std::filesystem::path config;
  std::optional<std::vector<double>> times;  // overrides export.times
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  OutputFormat format = OutputFormat::kCsv;
};

/// For each time t_k: path_<k>.csv, hist_<k>.csv (+ hist_<k>.ppm), plus path_summary.json.
ExitCode cmd_export_path(const ExportPathOptions& opts, std::ostream& log);

/// Parses argv and dispatches to a subcommand; returns the exit status.
int run_cli(int argc, char** argv);

}  // namespace flowlab
