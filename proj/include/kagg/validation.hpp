#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kagg {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Randomised property checks over the library: weight normalisation, cobra
/// equivalences, parallel paths against their serial references, gradients against
/// central differences, kNN against a linear scan, split partitions.
std::vector<CheckResult> run_validation_suite(std::uint64_t seed, std::size_t instances = 20);

}  // namespace kagg
