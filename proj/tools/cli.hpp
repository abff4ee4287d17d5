#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fvsggm::cli {

/// Runs one command. args excludes the program name. Returns the process exit
/// code: 0 ok, 2 input error, 3 numerical or invariant error, 4 resource cap.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fvsggm::cli
