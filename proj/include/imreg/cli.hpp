#pragma once

namespace imreg {

/// Entry point of the `imreg` command-line tool. Returns the process exit
/// code: 0 on success, 2 when any frame failed to register, 1 on error.
int run_cli(int argc, char** argv);

}  // namespace imreg
