#pragma once

namespace fgln {

// Entry point for the fgln tool. Returns a process exit code:
// 0 success, 1 runtime failure, 2 usage or configuration error.
int run_cli(int argc, char** argv);

}  // namespace fgln
