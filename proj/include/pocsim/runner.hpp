#pragma once

#include <string>
#include <vector>

namespace pocsim::runner {

/// Exit codes: 0 success, 1 assertion failure during the run, 2 config or
/// usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitConfig = 2;

/// Full command-line entry point. Subcommands: kac, circle, averaging,
/// boltzmann3, speciation, chaos-sweep, t1-check, marginal-gap.
/// A JSON config file (--config) supplies defaults; flags override it.
/// POCSIM_OUT_ROOT prefixes relative output directories.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace pocsim::runner
