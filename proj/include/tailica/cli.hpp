#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tailica {

/// Exit codes of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_numerical = 3 };

/// Runs one `tailica` invocation; `args` excludes the program name.
/// Messages go to `out`, diagnostics to `err`; nothing is thrown.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tailica
