#pragma once

namespace spherelab {

inline constexpr const char* kVersion = "0.1.0";

// Full command-line entry point. Exit codes: 0 success, 1 I/O or unexpected
// failure, 2 usage error, 3 numeric-domain violation.
int run_cli(int argc, char** argv);

}  // namespace spherelab
