#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ensx::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // unexpected internal error
  kExitInput = 2,       // malformed or inconsistent input
  kExitEstimation = 3,  // a unit of work failed in strict mode
  kExitConfig = 4,      // bad flags, config file or environment
};

// A unit of work failed and strict mode is on.
class EstimationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs the tool; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ensx::cli
