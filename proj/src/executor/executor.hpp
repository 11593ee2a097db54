#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace tcshpt {

// External trainer invocation. The child receives the configuration as one
// JSON object on stdin and reports epoch metrics as JSON lines on stdout:
//   {"epoch": 1, "metrics": {"loss": 0.9}}
//   {"final": true, "metrics": {"loss": 0.4}}
// stderr is forwarded to this process and its tail kept for diagnostics.
struct CommandSpec {
    std::vector<std::string> argv;
    std::string workdir;  // empty: inherit the current directory
    std::optional<double> timeout_s;  // default 3600
    std::map<std::string, std::string> env;  // overlaid on the environment

    bool operator==(const CommandSpec&) const = default;
};

struct Objective {
    enum class Kind { kBuiltin, kCommand };
    Kind kind = Kind::kBuiltin;
    std::string builtin_name;
    std::optional<CommandSpec> command;

    bool operator==(const Objective&) const = default;
};

struct BuiltinInfo {
    std::string name;
    SearchSpace space_template;
};

// Always includes "quadratic_2_3", the analytic objective
// (x-2)^2 + (y-3)^2 over x, y in [-10, 10].
std::vector<BuiltinInfo> list_builtins();

// Evaluates one configuration. Builtins are pure and instantaneous; commands
// run as subprocesses. Child failures (non-zero exit, timeout, protocol
// violations) come back as a FAILED result carrying diagnostics, never as an
// exception; a FAILED result never carries the goal metric. Throws
// Error(kObjectiveNotFound) for unknown builtin names.
TrialResult run_trial(const Objective& objective, const Configuration& config,
                      const Goal& goal);

}  // namespace tcshpt
