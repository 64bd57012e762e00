#pragma once
// Command-line front end: ingest, query, eval, stats, config.
//
// Exit codes: 0 ok, 1 runtime failure, 2 input error (missing or malformed
// files, bad configuration), 3 empty graph, 64 usage error.

#include <ostream>

namespace assocmem {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitEmptyGraph = 3;
inline constexpr int kExitUsage = 64;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace assocmem
