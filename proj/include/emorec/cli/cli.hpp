#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace emorec::cli {

/// Runs one command line (without the program name). Returns the process
/// exit status; failures print "error: <class>: <message>" on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace emorec::cli
