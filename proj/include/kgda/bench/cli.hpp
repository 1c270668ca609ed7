#pragma once

#include <string>
#include <vector>

namespace kgda::bench {

// Entry point for the kgda command-line tool. Takes the argument list
// without the program name. Returns 0 on success, 1 on a runtime failure
// (message goes to stderr), 2 on a usage error.
int run_cli(std::vector<std::string> args);

}  // namespace kgda::bench
