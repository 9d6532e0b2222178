#pragma once

#include <ostream>

namespace profwall {

// Exit codes: 0 success, 1 validation failure or verdict mismatch, 2 usage or
// I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;

// Commands: check, compile, run, fuzz, attack, bench.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace profwall
