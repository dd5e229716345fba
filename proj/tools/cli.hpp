#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sturmian::cli {

enum ExitCode : int {
  kOk = 0,
  kFailed = 1,  // uncertified gaps or a failed verification
  kInvalidInput = 2,
  kNumericFailure = 3,
  kTreeInvariant = 4,
};

/// Runs the command line `args` (without the program name). Regular output
/// goes to `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sturmian::cli
