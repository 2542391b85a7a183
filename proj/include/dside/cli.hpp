#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dside {

/// Runs the command line `args` (args[0] is the program name) and returns
/// the process exit code. Reports go to `--out` files or `out`; diagnostics
/// go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dside
