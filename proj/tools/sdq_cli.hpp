#pragma once

#include <iosfwd>

namespace sdq {

/// Runs one sdq invocation (gen, build, query or bench). Results go to `out`,
/// diagnostics to `err`; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sdq
