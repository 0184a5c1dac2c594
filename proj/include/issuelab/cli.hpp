#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace issuelab::cli {

/// Exit statuses of run().
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // a module reported an error
inline constexpr int kUsage = 2;    // bad flags or subcommand

/// Entry point of the `issuelab` tool. `args` excludes the program name.
/// Diagnostics go to `err`, human-readable summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

/// Names of the files `report` writes, in a fixed order.
const std::vector<std::string>& report_files();

}  // namespace issuelab::cli
