#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "flowlab/oracle.hpp"

namespace flowlab {

enum class DatasetKind { kCheckerboard, kGmm, kMoons };

std::string_view to_string(DatasetKind kind) noexcept;
DatasetKind dataset_kind_from_string(std::string_view name);

/// Toy 2D datasets.
///   checkerboard: 4x4 unit cells on [-2, 2]^2, cells with even (i + j) filled
///                 uniformly; label = index of the filled cell (0..7).
///   gmm:          n_components means on a circle of radius `radius`, isotropic
///                 std `component_std`; label = component.
///   moons:        two interleaved half circles with Gaussian noise `noise_std`;
///                 label = moon.
struct DatasetSpec {
  DatasetKind kind = DatasetKind::kCheckerboard;
  std::size_t n_points = 4096;
  std::uint64_t seed = 0;
  int n_components = 2;
  double radius = 2.0;
  double component_std = 0.1;
  double noise_std = 0.05;

  void validate() const;
};

Dataset make_dataset(const DatasetSpec& spec);

/// Means of the gmm components, ordered by label.
std::vector<Vector> gmm_means(const DatasetSpec& spec);

/// Occupied checkerboard cell (row-major over 4x4) or -1 for an empty cell.
int checkerboard_cell_label(double x, double y);

/// 2 mean|a - b| - mean|a - a'| - mean|b - b'| over all ordered pairs
/// (including i = j). OpenMP over row blocks with a fixed-order reduction.
double energy_distance(std::span<const Vector> a, std::span<const Vector> b);
double energy_distance_serial(std::span<const Vector> a, std::span<const Vector> b);

struct HistogramBounds {
  double x_min, x_max, y_min, y_max;
};

struct Histogram2D {
  HistogramBounds bounds;
  std::size_t nx, ny;
  std::vector<std::size_t> counts;  // row-major, index iy * nx + ix
  std::size_t out_of_bounds = 0;

  std::size_t at(std::size_t ix, std::size_t iy) const { return counts[iy * nx + ix]; }
  std::size_t in_bounds() const noexcept;
};

/// Bins are half-open [lo, hi) except the last bin on each axis, which is closed.
Histogram2D histogram2d(std::span<const Vector> samples, const HistogramBounds& bounds,
                        std::size_t nx, std::size_t ny);

/// Fraction of samples whose nearest mean is the requested class.
double class_purity(std::span<const Vector> samples, std::span<const int> requested,
                    std::span<const Vector> means);
double class_purity(std::span<const Vector> samples, int requested, std::span<const Vector> means);

}  // namespace flowlab
