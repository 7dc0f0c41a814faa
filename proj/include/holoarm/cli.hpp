// Command-line front end: fit, train, eval, scenario, drop, report.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace holoarm {

enum ExitCode { kExitOk = 0, kExitContract = 1, kExitIo = 2 };

// `args[0]` is the program name. Normal output goes to `out`, diagnostics
// and usage to `err`.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_run(int argc, char** argv);

}  // namespace holoarm
