#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clearing {

/// Runs one command line (args excludes the program name). Returns 0 on
/// success, 1 on runtime failure, 2 on usage errors; failures print a JSON
/// object {"error", "message"} to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clearing
