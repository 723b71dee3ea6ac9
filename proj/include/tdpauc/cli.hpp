#pragma once

#include <iosfwd>

namespace tdpauc {

/// Exit codes: 0 success, 2 input or parameter error, 3 degenerate data,
/// 4 numerical failure.
inline constexpr int kExitInput = 2;
inline constexpr int kExitDegenerate = 3;
inline constexpr int kExitNumeric = 4;

/// Parses argv and runs the requested subcommand. Results go to `out`
/// unless --out names a file; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tdpauc
