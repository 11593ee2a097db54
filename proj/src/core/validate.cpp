#include "core/validate.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/format.hpp"

namespace tcshpt {

namespace {

double require_number(const ParamDef& def, const ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    const auto& text = std::get<std::string>(v);
    auto parsed = parse_number(text);
    if (!parsed) {
        throw Error(Errc::kMalformedValue,
                    "parameter " + def.name + ": not a number: \"" + text + "\"",
                    def.name);
    }
    return *parsed;
}

ParamValue normalize_numeric(const ParamDef& def, const ParamValue& v,
                             std::vector<Warning>& warnings) {
    double x = require_number(def, v);
    if (def.kind == ParamKind::kInt) x = std::round(x);
    if (x < def.low || x > def.high) {
        double clamped = x < def.low ? def.low : def.high;
        warnings.push_back({WarningCode::kClamped, def.name,
                            fmt_shortest(x) + " clamped to " +
                                fmt_shortest(clamped)});
        x = clamped;
    }
    return x;
}

ParamValue normalize_choice(const ParamDef& def, const ParamValue& v) {
    for (const auto& c : def.values) {
        if (value_equal(v, c)) return c;
    }
    // A numeric string may denote a numeric choice (e.g. "64" for 64).
    if (const auto* s = std::get_if<std::string>(&v)) {
        if (auto n = parse_number(*s)) {
            for (const auto& c : def.values) {
                if (const auto* cd = std::get_if<double>(&c); cd && *cd == *n) {
                    return c;
                }
            }
        }
    }
    throw Error(Errc::kInvalidChoice,
                "parameter " + def.name + ": \"" + fmt_value(v) +
                    "\" is not one of the allowed choices",
                def.name);
}

ParamValue fill_missing(const ParamDef& def, const Configuration* last,
                        std::vector<Warning>& warnings) {
    if (last != nullptr) {
        if (const ParamValue* prev = last->find(def.name)) {
            warnings.push_back({WarningCode::kFilled, def.name,
                                "missing, reused previous value " +
                                    fmt_value(*prev, def.kind)});
            return *prev;
        }
    }
    ParamValue mid = def.midpoint();
    warnings.push_back({WarningCode::kFilled, def.name,
                        "missing, filled with " + fmt_value(mid, def.kind)});
    return mid;
}

}  // namespace

Validated validate_config(const SearchSpace& space,
                          const std::map<std::string, ParamValue>& raw,
                          const Configuration* last) {
    for (const auto& [name, value] : raw) {
        if (space.find(name) == nullptr) {
            throw Error(Errc::kUnknownParameter,
                        "unknown parameter \"" + name + "\"", name);
        }
    }

    Validated out;
    for (const auto& def : space.params) {
        if (def.fixed) {
            out.config.assignments.emplace_back(def.name, *def.fixed_value);
            continue;
        }
        auto it = raw.find(def.name);
        ParamValue value = it == raw.end()
                               ? fill_missing(def, last, out.warnings)
                               : it->second;
        if (def.kind == ParamKind::kChoice) {
            value = normalize_choice(def, value);
        } else {
            value = normalize_numeric(def, value, out.warnings);
        }
        out.config.assignments.emplace_back(def.name, value);
    }
    return out;
}

const TrialRecord& best_trial(const ExperimentLog& log, const Goal& goal) {
    const TrialRecord* best = nullptr;
    double best_metric = 0.0;
    for (const auto& trial : log.trials) {
        if (trial.result.status != TrialStatus::kCompleted) continue;
        auto metric = trial.result.final_metric(goal.metric_name);
        if (!metric) continue;
        if (best == nullptr || goal.better(*metric, best_metric)) {
            best = &trial;
            best_metric = *metric;
        }
    }
    if (best == nullptr) {
        throw Error(Errc::kNoCompletedTrials,
                    "log has no completed trial with metric \"" +
                        goal.metric_name + "\"");
    }
    return *best;
}

}  // namespace tcshpt
