#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mgcn::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kDataError = 2,
    kNumericalError = 3,
};

/// Runs one command line (args excludes the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Applies MGCN_NUM_THREADS to OpenMP and Eigen; returns the thread count in use.
int configure_threads();

} // namespace mgcn::cli
