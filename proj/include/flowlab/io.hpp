#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowlab/data_eval.hpp"
#include "flowlab/dynamics.hpp"
#include "flowlab/guidance.hpp"
#include "flowlab/net.hpp"
#include "flowlab/oracle.hpp"
#include "flowlab/train.hpp"

namespace flowlab {

/// Shortest text with 17 significant digits; parses back to the same double.
std::string format_double(double v);

// CSV writers. Every file starts with a header row.

/// sample_id,x0,...,x{d-1}[,label,w]
void write_samples_csv(const std::filesystem::path& file, std::span<const Vector> samples,
                       std::optional<int> label = std::nullopt,
                       std::optional<double> w = std::nullopt);
/// step,t,x0,...
void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj);
/// step,loss
void write_loss_history_csv(const std::filesystem::path& file, std::span<const LossRecord> history);
/// point_id,x0,...[,label]
void write_dataset_csv(const std::filesystem::path& file, const Dataset& data);
/// ix,iy,x_lo,x_hi,y_lo,y_hi,count
void write_histogram_csv(const std::filesystem::path& file, const Histogram2D& hist);
/// probe,t,x0,...,residual
void write_residual_report_csv(const std::filesystem::path& file, const ResidualReport& report);

inline constexpr int kImageSize = 512;

/// Binary P6 raster, white background, 3x3 marks, bounds mapped linearly.
void write_scatter_ppm(const std::filesystem::path& file, std::span<const Vector> samples,
                       const HistogramBounds& bounds, std::span<const int> labels = {});
/// Binary P6 raster shading each histogram bin by its count.
void write_heatmap_ppm(const std::filesystem::path& file, const Histogram2D& hist);

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  MlpParams params;
  ScheduleKind schedule = ScheduleKind::kCondOT;
  LossKind loss_kind = LossKind::kCfm;
  double label_drop_eta = 0.0;
  TimeClamp t_clamp;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
};

std::string checkpoint_to_json(const Checkpoint& ck);
/// Throws ConfigError naming the offending field.
Checkpoint checkpoint_from_json(std::string_view text);
void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& file);

struct SamplingSection {
  double w = 3.0;
  double sigma = 0.0;
  std::size_t n_steps = 100;
  std::size_t n_samples = 4096;
  std::uint64_t seed = 0;
};

struct ExportSection {
  std::vector<double> times = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t n_samples = 4096;
  std::size_t bins = 64;
  HistogramBounds bounds{-3.0, 3.0, -3.0, 3.0};
};

/// One JSON document per run. Unknown keys are rejected.
struct RunConfig {
  DatasetSpec dataset;
  MlpSpec model;
  TrainConfig train;
  SamplingSection guidance;
  ExportSection export_path;
  std::string out_dir;
};

/// Throws ConfigError naming the offending field (e.g. "train.batch_size").
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& file);

std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, std::string_view text);

}  // namespace flowlab
