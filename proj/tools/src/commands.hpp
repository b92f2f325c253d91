#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqscore::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

/// Runs the tool with `args` (excluding the program name). Event input for
/// `monitor` comes from `in`; reports and checkpoint records go to `out`,
/// diagnostics and summaries to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace seqscore::cli
