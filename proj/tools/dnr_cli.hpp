#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dnr::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericFailure = 3,
};

// Runs one command line (without the program name). Normal output goes to
// `out`, progress and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dnr::cli
