#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ghostdet::tools {

/// Process exit codes of the ghostdet command.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,   // bad flags or arguments
  kExitIo = 3,      // unreadable input or unwritable output
  kExitData = 4,    // malformed, incompatible or divergent data
};

/// Runs the command line; args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ghostdet::tools
