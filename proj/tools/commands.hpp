#pragma once

#include <string>
#include <vector>

namespace dagreg::cli {

/// Full command line (argv[0] included); returns the process exit code.
int run(int argc, char** argv);
int run(std::vector<std::string> args);

}  // namespace dagreg::cli
