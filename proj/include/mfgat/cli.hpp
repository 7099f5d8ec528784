#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mfgat::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,    // unknown subcommand/flag or malformed value
  kIo = 3,       // unreadable or unwritable file
  kConfig = 4,   // configuration failed validation
  kFormat = 5,   // dataset/checkpoint malformed or mutually inconsistent
  kRuntime = 6,  // training aborted, gradient audit failed, other runtime error
};

// Relative output directories are placed under this variable when it is set.
inline constexpr const char* kOutputRootEnv = "MFGAT_OUTPUT_ROOT";

/// Runs one subcommand. Failures print a single line
/// `error: code=<n> kind=<kind> [field=<path>] message="<text>"` to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfgat::cli
