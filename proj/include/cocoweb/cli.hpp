#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cocoweb {

/// Exit statuses of `cocoweb run`.
enum ExitStatus : int {
  kAllDecided = 0,    // every tool answered YES or NO
  kUndecided = 1,     // some MAYBE, TIMEOUT or ERROR
  kUsageError = 2,
};

/// Entry point shared by the `cocoweb` binary and the tests. `args` excludes
/// the program name.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace cocoweb
