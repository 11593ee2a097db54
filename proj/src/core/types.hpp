#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace tcshpt {

// A parameter assignment is either numeric or a choice token. INT-kind
// parameters are stored as integral doubles.
using ParamValue = std::variant<double, std::string>;

bool value_equal(const ParamValue& a, const ParamValue& b);

enum class Direction { kMaximize, kMinimize };

const char* to_string(Direction d);
Direction direction_from_string(const std::string& s);

struct Goal {
    std::string metric_name;
    Direction direction = Direction::kMaximize;
    double target_value = 0.0;

    // True when `candidate` is at least as good as `incumbent` for this goal.
    bool not_worse(double candidate, double incumbent) const;
    // True when `candidate` is strictly better than `incumbent`.
    bool better(double candidate, double incumbent) const;

    bool operator==(const Goal&) const = default;
};

enum class ParamKind { kFloat, kInt, kChoice };
enum class Scale { kLinear, kLog };

const char* to_string(ParamKind k);
const char* to_string(Scale s);

struct ParamDef {
    std::string name;
    ParamKind kind = ParamKind::kFloat;
    double low = 0.0;   // FLOAT/INT only, inclusive
    double high = 0.0;  // FLOAT/INT only, inclusive
    std::vector<ParamValue> values;  // CHOICE only, ordered
    Scale scale = Scale::kLinear;    // FLOAT/INT only
    bool fixed = false;
    std::optional<ParamValue> fixed_value;

    bool is_numeric() const { return kind != ParamKind::kChoice; }
    // Range midpoint: geometric for LOG, arithmetic for LINEAR, first value
    // for CHOICE. INT results are rounded half-away-from-zero.
    ParamValue midpoint() const;

    bool operator==(const ParamDef&) const = default;
};

struct SearchSpace {
    std::vector<ParamDef> params;

    const ParamDef* find(const std::string& name) const;
    // Throws Error(invalid_space) when an invariant is broken.
    void validate() const;

    bool operator==(const SearchSpace&) const = default;
};

// One assignment per space parameter, kept in space order.
struct Configuration {
    std::vector<std::pair<std::string, ParamValue>> assignments;

    const ParamValue* find(const std::string& name) const;
    bool operator==(const Configuration&) const = default;
};

enum class TrialStatus { kCompleted, kFailed };

const char* to_string(TrialStatus s);

struct EpochRecord {
    int epoch_index = 1;  // strictly increasing from 1
    std::map<std::string, double> metrics;

    bool operator==(const EpochRecord&) const = default;
};

struct TrialResult {
    std::vector<EpochRecord> epochs;
    std::map<std::string, double> final_metrics;
    double wall_time_s = 0.0;
    TrialStatus status = TrialStatus::kCompleted;
    // Diagnostics captured when status is FAILED (exit code, protocol error,
    // stderr tail). Empty for completed trials.
    std::string failure_reason;

    std::optional<double> final_metric(const std::string& name) const;

    bool operator==(const TrialResult&) const = default;
};

enum class Proposer { kLlm, kFallbackRandom, kScripted };

const char* to_string(Proposer p);

struct TrialRecord {
    int index = 1;  // equals position in the log, 1-based
    Configuration config;
    std::string justification;
    TrialResult result;
    Proposer proposer = Proposer::kLlm;

    bool operator==(const TrialRecord&) const = default;
};

struct ExperimentLog {
    std::string run_id;
    std::uint64_t seed = 0;
    Goal goal;
    SearchSpace space;
    std::vector<TrialRecord> trials;
    std::string created_at;  // ISO 8601 UTC

    void append(TrialRecord record);

    bool operator==(const ExperimentLog&) const = default;
};

}  // namespace tcshpt
