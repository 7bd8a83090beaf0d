#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kscdl {

/// Runs one CLI invocation; args excludes the program name. Failures print a
/// single "error: <Code>: <message>" line to `err`. Returns the exit status:
/// 0 on success, 1 for library errors, 2 for usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kscdl
