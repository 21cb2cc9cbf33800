#ifndef IMAB_CLI_HPP
#define IMAB_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace imab::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,          // bad flags or unparseable input
  kNotConverged = 3,   // report still written
  kBatchFailure = 4,   // fewer than 90% of benchmark fits completed
};

/// Runs `imab <args...>` (args exclude the program name). "-" as a path means
/// `in` for inputs and `out` for outputs; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace imab::cli

#endif  // IMAB_CLI_HPP
