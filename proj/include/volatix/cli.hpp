#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace volatix::cli {

// Exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitJoin = 3;
inline constexpr int kExitInternal = 4;

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace volatix::cli
