#pragma once

#include <ostream>

namespace rkinv::cli {

enum ExitCode : int {
  kOk = 0,
  kTestFailure = 1,
  kConfigError = 2,
  kRuntimeError = 3,
};

/// Entry point of the rkinv tool. Writes human-readable output to `out`,
/// diagnostics to `err`, and data files under the --out directory.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace rkinv::cli
