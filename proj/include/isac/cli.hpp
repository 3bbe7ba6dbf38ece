#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace isac::cli {

/// Exit codes of the command-line tool.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kRuntimeError = 2;

/// Runs one command. `args` excludes the program name, e.g.
/// {"crlb-sweep", "--config", "sweep.cfg", "--out", "results"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace isac::cli
