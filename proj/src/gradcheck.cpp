#include "alignbench/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace alignbench {
namespace {

double evaluate(const LossBuilder& build, const std::vector<RealMatrix>& params) {
  CompGraph g;
  std::vector<NodeId> ids;
  ids.reserve(params.size());
  for (const RealMatrix& p : params) ids.push_back(g.parameter(p));
  return g.value(build(g, ids))(0, 0);
}

}  // namespace

GradCheckResult check_gradients(const LossBuilder& build, std::vector<RealMatrix> params,
                                double step) {
  CompGraph g;
  std::vector<NodeId> ids;
  for (const RealMatrix& p : params) ids.push_back(g.parameter(p));
  const GradientMap grads = g.reverse_sweep(build(g, ids));

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const RealMatrix& analytic = grads.at(ids[p]);
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      double& entry = params[p].values()[i];
      const double saved = entry;
      entry = saved + step;
      const double up = evaluate(build, params);
      entry = saved - step;
      const double down = evaluate(build, params);
      entry = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.values()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
      ++result.entries_checked;
    }
  }
  return result;
}

}  // namespace alignbench
