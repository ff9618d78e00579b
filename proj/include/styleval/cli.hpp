#pragma once

#include <string>
#include <vector>

namespace styleval::cli {

// Runs one CLI invocation; args excludes the program name. Exit codes:
// 0 success, 2 config/usage error, 3 data error, 4 backend error. Errors
// also land on stderr as one machine-readable JSON line.
int run(const std::vector<std::string>& args);

}  // namespace styleval::cli
