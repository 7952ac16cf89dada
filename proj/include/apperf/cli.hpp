#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace apperf {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitSolver = 3 };

int cli_main(int argc, char** argv);
// args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace apperf
