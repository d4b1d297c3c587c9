#include "flowlab/data_eval.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "flowlab/error.hpp"
#include "flowlab/parallel.hpp"
#include "flowlab/rng.hpp"

namespace flowlab {

std::string_view to_string(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::kCheckerboard: return "checkerboard";
    case DatasetKind::kGmm: return "gmm";
    case DatasetKind::kMoons: return "moons";
  }
  return "checkerboard";
}

DatasetKind dataset_kind_from_string(std::string_view name) {
  if (name == "checkerboard") return DatasetKind::kCheckerboard;
  if (name == "gmm") return DatasetKind::kGmm;
  if (name == "moons") return DatasetKind::kMoons;
  throw DomainError("unknown dataset kind '" + std::string(name) + "'");
}

void DatasetSpec::validate() const {
  if (n_points < 1) throw DomainError("n_points must be >= 1");
  if (kind == DatasetKind::kGmm) {
    if (n_components < 1) throw DomainError("n_components must be >= 1");
    if (!(component_std >= 0.0)) throw DomainError("component_std must be >= 0");
  }
  if (kind == DatasetKind::kMoons && !(noise_std >= 0.0)) {
    throw DomainError("noise_std must be >= 0");
  }
}

namespace {

constexpr double kBoardMin = -2.0;
constexpr int kBoardCells = 4;

}  // namespace

int checkerboard_cell_label(double x, double y) {
  const int i = static_cast<int>(std::floor(x - kBoardMin));
  const int j = static_cast<int>(std::floor(y - kBoardMin));
  if (i < 0 || i >= kBoardCells || j < 0 || j >= kBoardCells) return -1;
  if ((i + j) % 2 != 0) return -1;
  return (j * kBoardCells + i) / 2;
}

std::vector<Vector> gmm_means(const DatasetSpec& spec) {
  std::vector<Vector> means;
  for (int k = 0; k < spec.n_components; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / spec.n_components;
    means.push_back({spec.radius * std::cos(angle), spec.radius * std::sin(angle)});
  }
  return means;
}

Dataset make_dataset(const DatasetSpec& spec) {
  spec.validate();
  Rng rng(spec.seed, 0x64617461ULL);
  std::vector<Vector> points;
  std::vector<int> labels;
  points.reserve(spec.n_points);
  labels.reserve(spec.n_points);
  switch (spec.kind) {
    case DatasetKind::kCheckerboard: {
      // Occupied cells in row-major order; cell k has label k.
      std::vector<std::pair<int, int>> cells;
      for (int j = 0; j < kBoardCells; ++j) {
        for (int i = 0; i < kBoardCells; ++i) {
          if ((i + j) % 2 == 0) cells.emplace_back(i, j);
        }
      }
      for (std::size_t n = 0; n < spec.n_points; ++n) {
        const auto k = static_cast<int>(rng.below(cells.size()));
        const double x = kBoardMin + cells[k].first + rng.uniform();
        const double y = kBoardMin + cells[k].second + rng.uniform();
        points.push_back({x, y});
        labels.push_back(k);
      }
      break;
    }
    case DatasetKind::kGmm: {
      const auto means = gmm_means(spec);
      for (std::size_t n = 0; n < spec.n_points; ++n) {
        const auto k = static_cast<int>(rng.below(means.size()));
        const double x = means[k][0] + spec.component_std * rng.normal();
        const double y = means[k][1] + spec.component_std * rng.normal();
        points.push_back({x, y});
        labels.push_back(k);
      }
      break;
    }
    case DatasetKind::kMoons: {
      for (std::size_t n = 0; n < spec.n_points; ++n) {
        const auto k = static_cast<int>(rng.below(2));
        const double angle = std::numbers::pi * rng.uniform();
        double x = k == 0 ? std::cos(angle) : 1.0 - std::cos(angle);
        double y = k == 0 ? std::sin(angle) : 0.5 - std::sin(angle);
        x += spec.noise_std * rng.normal();
        y += spec.noise_std * rng.normal();
        points.push_back({x, y});
        labels.push_back(k);
      }
      break;
    }
  }
  return Dataset::uniform(std::move(points), std::move(labels));
}

namespace {

void check_sets(std::span<const Vector> a, std::span<const Vector> b) {
  if (a.empty() || b.empty()) throw DomainError("energy distance needs non-empty sample sets");
  const std::size_t d = a.front().size();
  for (const auto& p : a) {
    if (p.size() != d) throw DomainError("sample dimension mismatch");
  }
  for (const auto& p : b) {
    if (p.size() != d) throw DomainError("sample dimension mismatch");
  }
}

// Flat copy so the O(n^2) loops stream through contiguous memory.
std::vector<double> flatten(std::span<const Vector> s) {
  std::vector<double> flat;
  flat.reserve(s.size() * s.front().size());
  for (const auto& p : s) flat.insert(flat.end(), p.begin(), p.end());
  return flat;
}

double row_distance_sum(const double* row, const std::vector<double>& other, std::size_t n,
                        std::size_t d) {
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double* q = other.data() + k * d;
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - q[j];
      sq += diff * diff;
    }
    sum += std::sqrt(sq);
  }
  return sum;
}

}  // namespace

double energy_distance_serial(std::span<const Vector> a, std::span<const Vector> b) {
  check_sets(a, b);
  const std::size_t d = a.front().size();
  const auto fa = flatten(a);
  const auto fb = flatten(b);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += row_distance_sum(fa.data() + i * d, fb, b.size(), d);
    aa += row_distance_sum(fa.data() + i * d, fa, a.size(), d);
  }
  for (std::size_t i = 0; i < b.size(); ++i) bb += row_distance_sum(fb.data() + i * d, fb, b.size(), d);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  return 2.0 * ab / (na * nb) - aa / (na * na) - bb / (nb * nb);
}

double energy_distance(std::span<const Vector> a, std::span<const Vector> b) {
  check_sets(a, b);
  const std::size_t d = a.front().size();
  const auto fa = flatten(a);
  const auto fb = flatten(b);
  // Per-row sums are written independently and reduced in row order.
  std::vector<double> ab(a.size()), aa(a.size()), bb(b.size());
  parallel_for(a.size() + b.size(), [&](std::size_t r) {
    if (r < a.size()) {
      ab[r] = row_distance_sum(fa.data() + r * d, fb, b.size(), d);
      aa[r] = row_distance_sum(fa.data() + r * d, fa, a.size(), d);
    } else {
      const std::size_t i = r - a.size();
      bb[i] = row_distance_sum(fb.data() + i * d, fb, b.size(), d);
    }
  });
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += ab[i];
    saa += aa[i];
  }
  for (double v : bb) sbb += v;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  return 2.0 * sab / (na * nb) - saa / (na * na) - sbb / (nb * nb);
}

std::size_t Histogram2D::in_bounds() const noexcept {
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  return total;
}

namespace {

// Bin index on one axis or -1 when outside [lo, hi].
long axis_bin(double v, double lo, double hi, std::size_t bins) {
  if (!(v >= lo && v <= hi)) return -1;
  if (v == hi) return static_cast<long>(bins) - 1;
  auto k = static_cast<long>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
  if (k >= static_cast<long>(bins)) k = static_cast<long>(bins) - 1;
  return k;
}

}  // namespace

Histogram2D histogram2d(std::span<const Vector> samples, const HistogramBounds& bounds,
                        std::size_t nx, std::size_t ny) {
  if (nx < 1 || ny < 1) throw DomainError("histogram needs at least one bin per axis");
  if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
    throw DomainError("histogram bounds are inverted or empty");
  }
  Histogram2D hist{bounds, nx, ny, std::vector<std::size_t>(nx * ny, 0), 0};
  for (const auto& s : samples) {
    if (s.size() != 2) throw DomainError("histogram2d needs 2D samples");
    const long ix = axis_bin(s[0], bounds.x_min, bounds.x_max, nx);
    const long iy = axis_bin(s[1], bounds.y_min, bounds.y_max, ny);
    if (ix < 0 || iy < 0) {
      ++hist.out_of_bounds;
      continue;
    }
    ++hist.counts[static_cast<std::size_t>(iy) * nx + static_cast<std::size_t>(ix)];
  }
  return hist;
}

double class_purity(std::span<const Vector> samples, std::span<const int> requested,
                    std::span<const Vector> means) {
  if (requested.size() != samples.size()) throw DomainError("one requested label per sample");
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    int best = -1;
    double best_sq = 0.0;
    for (std::size_t k = 0; k < means.size(); ++k) {
      double sq = 0.0;
      for (std::size_t j = 0; j < samples[i].size(); ++j) {
        const double diff = samples[i][j] - means[k][j];
        sq += diff * diff;
      }
      if (best < 0 || sq < best_sq) {
        best = static_cast<int>(k);
        best_sq = sq;
      }
    }
    if (best == requested[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double class_purity(std::span<const Vector> samples, int requested, std::span<const Vector> means) {
  const std::vector<int> labels(samples.size(), requested);
  return class_purity(samples, labels, means);
}

}  // namespace flowlab
