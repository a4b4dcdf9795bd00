#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace shiftsel::cli {

/// Exit codes: 0 success, 1 usage or domain error, 2 file I/O or parse error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

/// Runs one subcommand. `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace shiftsel::cli
