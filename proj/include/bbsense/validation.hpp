#pragma once

// Built-in oracle suite behind `bbsense validate`.

#include "bbsense/types.hpp"

#include <string>
#include <vector>

namespace bbsense {

struct CheckResult {
  std::string name;
  Real value{};
  Real tolerance{};
  bool pass{};
  std::string detail;
};

struct ValidationOptions {
  /// Mutation hook: evaluate the fast GHZ amplitude with exponent m + 1.
  bool fault_ghz_exponent{false};
  Seed seed{0x5eed};
};

std::vector<CheckResult> run_validation_suite(const ValidationOptions& options = {});

}  // namespace bbsense
