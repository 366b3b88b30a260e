#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kmsq::cli {

enum ExitCode : int { kPass = 0, kCheckFailed = 1, kUsage = 2 };

/// Runs `kmsq <subcommand> [flags]`; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kmsq::cli
