#pragma once

#include <string>
#include <vector>

namespace pglab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Exact-oracle and statistical checks behind the `verify` CLI subcommand and
// the acceptance suite. `include_desk_scale` adds the minutes-long classic
// control learning reproductions.
std::vector<CheckResult> run_verification(bool include_desk_scale);

}  // namespace pglab
