#ifndef BRACKETFLOW_CLI_HPP
#define BRACKETFLOW_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace bracketflow {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitScienceFailure = 1;  // a physical check failed or a scheme went unstable
inline constexpr int kExitUsage = 2;           // bad arguments, config or parameter contract

/// bracketflow <command> [--key value]... [--config file.json] [--out dir] [--seed N]
///
/// Commands: flow, vectorfield, sde, fp, averages, verify. Values resolve as
/// built-in defaults < config file < flags; unknown keys are rejected.
/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bracketflow

#endif  // BRACKETFLOW_CLI_HPP
