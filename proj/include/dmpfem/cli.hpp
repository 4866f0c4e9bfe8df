#pragma once

namespace dmpfem {

/// Exit codes of cli_main.
enum ExitCode {
  kExitOk = 0,
  kExitFailure = 1,  ///< audit found violations
  kExitConfig = 2,
  kExitNoConvergence = 3,
  kExitIo = 4,
};

/// Entry point of the `dmpfem` tool: subcommands run, table, converge, audit.
int cli_main(int argc, char** argv);

}  // namespace dmpfem
