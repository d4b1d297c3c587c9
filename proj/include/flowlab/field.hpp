#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace flowlab {

using Vector = std::vector<double>;

/// Time-dependent vector field (x, t) -> R^d.
using FieldFunction = std::function<Vector(std::span<const double> x, double t)>;

/// Scalar field (x, t) -> R, e.g. a probability density along a path.
using DensityFunction = std::function<double(std::span<const double> x, double t)>;

/// Class label; std::nullopt is the null label used for unconditional guidance.
using Label = std::optional<int>;
inline constexpr Label kNullLabel = std::nullopt;

/// Label-conditional field (x, t, y) -> R^d over classes {0, ..., n_classes - 1}.
struct LabeledField {
  std::function<Vector(std::span<const double> x, double t, Label y)> eval;
  int n_classes = 0;
  std::size_t dim = 0;

  Vector operator()(std::span<const double> x, double t, Label y) const { return eval(x, t, y); }
};

}  // namespace flowlab
