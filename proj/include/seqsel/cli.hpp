#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqsel::cli {

/// Entry point of the `seqsel` tool. Returns the process exit code.
int run(int argc, char** argv);

/// Same, with explicit arguments (without the program name) and streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace seqsel::cli
