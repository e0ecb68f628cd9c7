#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rclab {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitNumeric = 3,
    kExitTruncated = 4,
};

/// Entry point of the `rclab` tool.  `args` excludes the program name.
/// Progress and error messages go to `log`.
int run_cli(const std::vector<std::string>& args, std::ostream& log);

}  // namespace rclab
