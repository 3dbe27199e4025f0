#pragma once

#include <iosfwd>

namespace nameprobe {

/// Entry point of the `nameprobe` tool. Returns the process exit code:
/// 0 for a completed run, 2 for configuration, input or credential errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nameprobe
