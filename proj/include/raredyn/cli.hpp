#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace raredyn::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kNumericalFailure = 3,
  kAssertionFailure = 4,
};

// Entry point of the raredyn tool. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace raredyn::cli
