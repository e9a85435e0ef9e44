#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zsmooth {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNonFinite = 3;

// Runs `zsmooth <subcommand> ...` with `args` excluding the program name.
// Subcommands: estimate, bench, optimize.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zsmooth
