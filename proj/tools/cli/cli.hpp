#pragma once

#include <string>
#include <vector>

namespace tobit::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kDivergence = 4,
};

/// Runs `tobit-iht` with args[0] as the program name. Never throws; errors
/// are reported on stderr and mapped to an ExitCode.
int run(const std::vector<std::string>& args);

}  // namespace tobit::cli
