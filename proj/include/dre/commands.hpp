#pragma once

#include <string>
#include <vector>

namespace dre::cli {

// Full CLI entry point (argv without the program name). Returns the process
// exit code: 0 iff the command finished with zero fatal errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace dre::cli
