#pragma once

namespace metalert::cli {

/// Entry point for the metalert command line: simulate | aggregate | train |
/// rates | verify | report. Returns the process exit status.
int run(int argc, const char* const* argv);

}  // namespace metalert::cli
