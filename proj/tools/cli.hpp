#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mtc::cli {

/// Runs one invocation. `args` excludes the program name.
/// Returns 0 on success, 1 on operational error and 2 on usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtc::cli
