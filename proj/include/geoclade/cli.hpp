#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace geoclade {

/// Subcommands run, summarize, export, simulate and validate. Returns the
/// process exit code: 0 success, 1 error, 2 results written without
/// convergence, CLI11 codes for usage errors.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace geoclade
