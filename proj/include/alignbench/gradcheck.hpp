#pragma once

#include <functional>
#include <span>
#include <vector>

#include "alignbench/graph.hpp"

namespace alignbench {

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradientTolerance = 1e-4;

// Builds a 1x1 loss node from parameter nodes (in the order given to
// check_gradients). Must depend only on the parameter values.
using LossBuilder = std::function<NodeId(CompGraph&, std::span<const NodeId>)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  bool passed(double tolerance = kGradientTolerance) const {
    return max_relative_error <= tolerance;
  }
};

// Compares reverse-sweep gradients against central differences
// (f(x+h) - f(x-h)) / 2h for every entry of every parameter. Relative error
// per entry is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckResult check_gradients(const LossBuilder& build, std::vector<RealMatrix> params,
                                double step = kFiniteDifferenceStep);

}  // namespace alignbench
