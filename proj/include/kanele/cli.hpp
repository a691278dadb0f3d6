#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kanele {

/// Runs the `kanele` command line (args excludes the program name). Diagnostics
/// go to `err` as a single line "error[E_CODE]: message". Returns the exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kanele
