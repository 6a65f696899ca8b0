#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qrouter {

/// Entry point of the `qrouter` command. Returns the process exit status:
/// 0 on success, 2 for usage errors, 1 for runtime failures. Failures print
/// one JSON line {"error": kind, "message": ...} to `err`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace qrouter
