#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace tcshpt {

enum class WarningCode { kClamped, kFilled };

struct Warning {
    WarningCode code = WarningCode::kClamped;
    std::string param;
    std::string detail;
};

struct Validated {
    Configuration config;
    std::vector<Warning> warnings;
};

// Normalizes a raw proposal against the space: fixed parameters are forced,
// INT values rounded half-away-from-zero, out-of-range numerics clamped with
// a warning, and parameters missing from `raw` filled from `last` (the most
// recent trial's configuration) or the range midpoint, with a warning.
//
// Throws Error with kUnknownParameter, kInvalidChoice, or kMalformedValue.
Validated validate_config(const SearchSpace& space,
                          const std::map<std::string, ParamValue>& raw,
                          const Configuration* last = nullptr);

// The completed trial with the best final goal metric; ties break toward the
// smallest index. Throws Error(kNoCompletedTrials).
const TrialRecord& best_trial(const ExperimentLog& log, const Goal& goal);

}  // namespace tcshpt
