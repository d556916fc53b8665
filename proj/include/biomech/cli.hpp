#pragma once

#include <string>
#include <vector>

namespace biomech {

// full command-line entry point (subcommands: metrics, simulate, train,
// refine, edit, invert, gradcheck); returns the process exit code
int cli_main(const std::vector<std::string>& args);

}  // namespace biomech
