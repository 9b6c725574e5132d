#pragma once

#include <iosfwd>

namespace rsim {

/// Entry point of the `rsim` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rsim
