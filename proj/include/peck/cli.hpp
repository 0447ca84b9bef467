#pragma once

namespace peck {

/// Command-line entry point. Returns the process exit code:
/// 0 success, 1 configuration error, 2 simulation failures over budget,
/// 3 I/O error.
int run_cli(int argc, char** argv);

} // namespace peck
