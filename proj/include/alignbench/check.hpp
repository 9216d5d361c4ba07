#pragma once

#include <functional>
#include <string>
#include <vector>

namespace alignbench {

// Built-in property suite behind `align-bench check`: alignment algebra,
// softmax normalization, finite-difference gradients, attention mechanics
// and metric closed forms. Each check is self-contained and seeded.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // worst observed error or first failure
  double seconds = 0.0;
};

using CheckProgress = std::function<void(const CheckResult&)>;

std::vector<CheckResult> run_checks(const CheckProgress& progress = {});

}  // namespace alignbench
