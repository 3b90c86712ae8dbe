#pragma once

#include <string>
#include <vector>

namespace obliv {

struct SelftestCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast invariant checks across all modules, a few seconds in total.
std::vector<SelftestCheck> run_selftest();

}  // namespace obliv
