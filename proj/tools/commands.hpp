#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rca::cli {

/// Runs one CLI invocation (args exclude the program name) and returns the
/// process exit code: 0 ok, 1 check failure, 2 parse/usage, 3 dimension.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rca::cli
