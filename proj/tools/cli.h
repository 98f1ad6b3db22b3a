// Entry point of the `disco` command-line tool, callable in-process by tests.

#ifndef DISCO_TOOLS_CLI_H_
#define DISCO_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace disco::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericError = 3,
};

// Data goes to `out`, logs and diagnostics to `err`.
int Run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace disco::cli

#endif  // DISCO_TOOLS_CLI_H_
