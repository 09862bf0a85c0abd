#pragma once

#include <iosfwd>

namespace automcq::cli {

// Process exit codes; stable across releases.
enum ExitCode : int {
  kOk = 0,
  kValidationFailure = 1,
  kBackendFailure = 2,
  kIoFailure = 3,
};

// Entry point behind the automcq binary: generate | grade | serve.
// Machine-readable JSON goes to out, diagnostics to err.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace automcq::cli
