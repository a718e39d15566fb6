#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace iclprobe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one CLI invocation (`args` excludes the program name). Failures
/// print a single JSON line `{"error": <category>, "message": ...}` to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace iclprobe::cli
