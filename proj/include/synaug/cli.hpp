#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace synaug {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputEnv = "SYNAUG_OUT";

/// Runs one subcommand. args[0] is the program name.
/// Returns 0 on success, 1 on validation errors, 2 on runtime failures.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace synaug
