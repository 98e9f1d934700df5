#pragma once

#include <iosfwd>

namespace mdapt::cli {

// Entry point of the mdapt tool. Returns the process exit code: 0 on
// success, the code of any mdapt::Error, 2 for a command-line error and 1
// for anything else. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mdapt::cli
