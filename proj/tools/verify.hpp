#pragma once

#include <string>
#include <vector>

#include "sturmian/contfrac.hpp"

namespace sturmian::cli {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Suites: contfrac, spectrum, tree, labels, all. Throws InvalidInput for any
/// other name.
std::vector<CheckResult> run_verify_suite(const std::string& suite, const PrecisionBudget& budget);

}  // namespace sturmian::cli
