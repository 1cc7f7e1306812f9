#pragma once

#include <iosfwd>

namespace elmech {

/// Exit codes of run_cli.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNonconvergence = 2 };

/// Subcommands: static, pullin, transient, dpullin, modal, oracle, mesh.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace elmech
