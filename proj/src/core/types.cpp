#include "core/types.hpp"

#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/format.hpp"

namespace tcshpt {

bool value_equal(const ParamValue& a, const ParamValue& b) {
    return a == b;
}

const char* to_string(Direction d) {
    return d == Direction::kMaximize ? "maximize" : "minimize";
}

Direction direction_from_string(const std::string& s) {
    if (iequals(s, "maximize") || iequals(s, "max")) return Direction::kMaximize;
    if (iequals(s, "minimize") || iequals(s, "min")) return Direction::kMinimize;
    throw Error(Errc::kInvalidExperiment, "unknown direction: " + s);
}

bool Goal::not_worse(double candidate, double incumbent) const {
    return direction == Direction::kMaximize ? candidate >= incumbent
                                             : candidate <= incumbent;
}

bool Goal::better(double candidate, double incumbent) const {
    return direction == Direction::kMaximize ? candidate > incumbent
                                             : candidate < incumbent;
}

const char* to_string(ParamKind k) {
    switch (k) {
        case ParamKind::kFloat: return "float";
        case ParamKind::kInt: return "int";
        case ParamKind::kChoice: return "choice";
    }
    return "float";
}

const char* to_string(Scale s) {
    return s == Scale::kLog ? "log" : "linear";
}

ParamValue ParamDef::midpoint() const {
    if (kind == ParamKind::kChoice) return values.front();
    double mid = scale == Scale::kLog ? std::sqrt(low * high)
                                      : (low + high) / 2.0;
    if (kind == ParamKind::kInt) mid = std::round(mid);
    return mid;
}

const ParamDef* SearchSpace::find(const std::string& name) const {
    for (const auto& p : params) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

namespace {

bool value_in_choices(const ParamValue& v, const std::vector<ParamValue>& values) {
    for (const auto& c : values) {
        if (value_equal(v, c)) return true;
    }
    return false;
}

void validate_param(const ParamDef& p) {
    if (p.name.empty()) {
        throw Error(Errc::kInvalidSpace, "parameter with empty name");
    }
    if (p.kind == ParamKind::kChoice) {
        if (p.values.empty()) {
            throw Error(Errc::kInvalidSpace,
                        "choice parameter " + p.name + " has no values", p.name);
        }
        for (size_t i = 0; i < p.values.size(); ++i) {
            for (size_t j = i + 1; j < p.values.size(); ++j) {
                if (value_equal(p.values[i], p.values[j])) {
                    throw Error(Errc::kInvalidSpace,
                                "choice parameter " + p.name +
                                    " has duplicate values",
                                p.name);
                }
            }
        }
    } else {
        if (!(p.low < p.high)) {
            throw Error(Errc::kInvalidSpace,
                        "parameter " + p.name + " requires low < high", p.name);
        }
        if (p.scale == Scale::kLog && !(p.low > 0.0)) {
            throw Error(Errc::kInvalidSpace,
                        "log-scale parameter " + p.name + " requires low > 0",
                        p.name);
        }
    }
    if (p.fixed) {
        if (!p.fixed_value) {
            throw Error(Errc::kInvalidSpace,
                        "fixed parameter " + p.name + " has no fixed_value",
                        p.name);
        }
        if (p.kind == ParamKind::kChoice) {
            if (!value_in_choices(*p.fixed_value, p.values)) {
                throw Error(Errc::kInvalidSpace,
                            "fixed_value of " + p.name + " not in choices",
                            p.name);
            }
        } else {
            const auto* d = std::get_if<double>(&*p.fixed_value);
            if (!d || *d < p.low || *d > p.high) {
                throw Error(Errc::kInvalidSpace,
                            "fixed_value of " + p.name + " out of range",
                            p.name);
            }
        }
    }
}

}  // namespace

void SearchSpace::validate() const {
    std::set<std::string> names;
    bool any_free = false;
    for (const auto& p : params) {
        validate_param(p);
        if (!names.insert(p.name).second) {
            throw Error(Errc::kInvalidSpace, "duplicate parameter " + p.name,
                        p.name);
        }
        if (!p.fixed) any_free = true;
    }
    if (params.empty() || !any_free) {
        throw Error(Errc::kInvalidSpace,
                    "search space needs at least one non-fixed parameter");
    }
}

const ParamValue* Configuration::find(const std::string& name) const {
    for (const auto& [n, v] : assignments) {
        if (n == name) return &v;
    }
    return nullptr;
}

const char* to_string(TrialStatus s) {
    return s == TrialStatus::kCompleted ? "completed" : "failed";
}

std::optional<double> TrialResult::final_metric(const std::string& name) const {
    auto it = final_metrics.find(name);
    if (it == final_metrics.end()) return std::nullopt;
    return it->second;
}

const char* to_string(Proposer p) {
    switch (p) {
        case Proposer::kLlm: return "llm";
        case Proposer::kFallbackRandom: return "fallback_random";
        case Proposer::kScripted: return "scripted";
    }
    return "llm";
}

void ExperimentLog::append(TrialRecord record) {
    record.index = static_cast<int>(trials.size()) + 1;
    trials.push_back(std::move(record));
}

const char* to_string(Errc c) {
    switch (c) {
        case Errc::kUnknownParameter: return "unknown_parameter";
        case Errc::kInvalidChoice: return "invalid_choice";
        case Errc::kMalformedValue: return "malformed_value";
        case Errc::kInvalidSpace: return "invalid_space";
        case Errc::kNoCompletedTrials: return "no_completed_trials";
        case Errc::kEmptyLog: return "empty_log";
        case Errc::kParseFailure: return "parse_failure";
        case Errc::kTimeout: return "timeout";
        case Errc::kHttpError: return "http_error";
        case Errc::kEmptyResponse: return "empty_response";
        case Errc::kScriptExhausted: return "script_exhausted";
        case Errc::kBackendUnavailable: return "backend_unavailable";
        case Errc::kObjectiveNotFound: return "objective_not_found";
        case Errc::kCommandTimeout: return "command_timeout";
        case Errc::kProtocolViolation: return "protocol_violation";
        case Errc::kAborted: return "aborted";
        case Errc::kIoError: return "io_error";
        case Errc::kInvalidExperiment: return "invalid_experiment";
    }
    return "error";
}

}  // namespace tcshpt
