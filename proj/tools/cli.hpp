#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dkd::cli {

// sysexits-style status codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 64;  ///< bad flags, descriptors or config values
inline constexpr int kExitParse = 65;  ///< unreadable or inconsistent input data
inline constexpr int kExitRun = 70;    ///< training divergence, I/O failure

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dkd::cli
