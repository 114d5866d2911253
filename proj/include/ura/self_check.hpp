#pragma once

#include <string>
#include <vector>

namespace ura {

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;  ///< failure reason, empty on success
};

/// Closed-form examples and invariants of every module. No simulation; runs
/// in well under a second.
std::vector<CheckOutcome> run_self_checks();

}  // namespace ura
