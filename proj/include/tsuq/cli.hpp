#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsuq::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

/// Entry point shared by the executable and the tests. `args[0]` is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsuq::cli
