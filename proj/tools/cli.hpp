#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdae::cli {

/// Runs one invocation; args excludes the program name. Returns the exit
/// code: 0 success, 1 usage error, 2 failed paths or failed checks.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "a..b" (inclusive) or a comma list of integers.
std::vector<int> parse_levels(const std::string& text);

std::vector<double> parse_doubles(const std::string& text);

}  // namespace sdae::cli
