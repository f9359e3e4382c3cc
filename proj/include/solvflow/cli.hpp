#pragma once

#include <iosfwd>

namespace solvflow {

/// Exit codes: 0 success, 1 a checked property failed, 2 usage or input error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace solvflow
