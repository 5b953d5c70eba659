#pragma once

#include <iosfwd>

namespace kgqa::cli {

// Parses argv, runs one subcommand and returns the process exit status.
int run_cli(int argc, char** argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace kgqa::cli
