#pragma once

#include <string>
#include <vector>

namespace translab {

// Full command-line surface; args excludes the program name. Returns the
// process exit code: 0 success, 2 domain/config error, 3 numerical failure,
// 64 usage trouble (unknown subcommand or flags).
int run_cli(const std::vector<std::string>& args);

}  // namespace translab
