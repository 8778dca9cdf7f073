#pragma once

#include <exception>
#include <string_view>

namespace spatialqa::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Process exit codes. Validation covers bad inputs and configuration;
/// runtime covers unreachable services and everything unexpected.
enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3 };

int exit_code_for(const std::exception& e);

/// Entry point behind the spatialqa binary: generate | evaluate | agent |
/// stats | report | serve-mock-tools. Prints errors to stderr and returns an
/// ExitCode instead of throwing.
int run(int argc, const char* const* argv);

}  // namespace spatialqa::cli
