#pragma once

#include <iosfwd>

namespace filterlens::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kRuntimeFailure = 3 };

/// Entry point of the `filterlens` tool. Data goes to `out`, diagnostics to `err`.
/// Default output directory: $FILTERLENS_OUT_DIR, else the working directory.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace filterlens::cli
