#pragma once

namespace mwsub {

/// Entry point of the `mwsub` command-line tool. Returns the process
/// exit code: 0 success, 1 usage/input error, 2 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace mwsub
