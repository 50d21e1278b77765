#pragma once
// In-process entry point of the mmmem command-line tool.
//
// Exit codes: 0 success, 1 internal or I/O failure, 2 usage or bad input,
// 3 adapter or transport failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace mmmem::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAdapter = 3;

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mmmem::cli
