#pragma once

#include <string>
#include <vector>

namespace radreg::cli {

// Batch entry point; args exclude the program name. Exit codes: 0 success,
// 1 usage, 2 I/O, 3 numerical failure.
int run(const std::vector<std::string>& args);

}  // namespace radreg::cli
