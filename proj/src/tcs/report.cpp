#include "tcs/report.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/format.hpp"

namespace tcshpt {

namespace {

constexpr double kTrendThreshold = 0.005;  // relative to |best final|

}  // namespace

const char* to_string(Trend t) {
    switch (t) {
        case Trend::kImproving: return "IMPROVING";
        case Trend::kStagnating: return "STAGNATING";
        case Trend::kDeclining: return "DECLINING";
        case Trend::kInsufficientData: return "INSUFFICIENT_DATA";
    }
    return "INSUFFICIENT_DATA";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::kImproved: return "IMPROVED";
        case Verdict::kWorsened: return "WORSENED";
        case Verdict::kNoChange: return "NO_CHANGE";
    }
    return "NO_CHANGE";
}

Trend classify_trend(const std::vector<double>& finals, Direction direction) {
    const size_t n = finals.size();
    if (n < 2) return Trend::kInsufficientData;

    double best = finals[0];
    for (double f : finals) {
        if (direction == Direction::kMaximize ? f > best : f < best) best = f;
    }

    const size_t window = std::min<size_t>(3, n - 1);
    double sum = 0.0;
    for (size_t i = n - window; i < n; ++i) {
        sum += finals[i] - finals[i - 1];
    }
    double mean = sum / static_cast<double>(window);
    if (direction == Direction::kMinimize) mean = -mean;

    const double eps = kTrendThreshold * std::abs(best);
    if (mean > eps) return Trend::kImproving;
    if (mean < -eps) return Trend::kDeclining;
    return Trend::kStagnating;
}

std::vector<Bin> partition_bins(const ParamDef& def) {
    std::vector<double> cuts;
    if (def.scale == Scale::kLog) {
        // One cut at every power of ten strictly inside the range. The
        // tolerance absorbs log10/pow rounding at exact-decade endpoints.
        int e_min = static_cast<int>(std::floor(std::log10(def.low))) - 1;
        int e_max = static_cast<int>(std::ceil(std::log10(def.high))) + 1;
        for (int e = e_min; e <= e_max; ++e) {
            double p = std::pow(10.0, e);
            if (p > def.low * (1.0 + 1e-12) && p < def.high * (1.0 - 1e-12)) {
                cuts.push_back(p);
            }
        }
    } else {
        double width = (def.high - def.low) / 4.0;
        for (int i = 1; i < 4; ++i) cuts.push_back(def.low + width * i);
    }
    std::vector<Bin> bins;
    double lo = def.low;
    for (double cut : cuts) {
        bins.push_back({lo, cut});
        lo = cut;
    }
    bins.push_back({lo, def.high});
    return bins;
}

std::vector<Bin> unexplored_regions(const ParamDef& def,
                                    const std::vector<double>& tried) {
    std::vector<Bin> bins = partition_bins(def);
    std::vector<bool> hit(bins.size(), false);
    for (double v : tried) {
        // Boundary values land in the lower bin; the first bin keeps its
        // own low endpoint.
        for (size_t i = 0; i < bins.size(); ++i) {
            bool in = (i == 0) ? (v >= bins[i].low && v <= bins[i].high)
                               : (v > bins[i].low && v <= bins[i].high);
            if (in) {
                hit[i] = true;
                break;
            }
        }
    }
    std::vector<Bin> out;
    for (size_t i = 0; i < bins.size(); ++i) {
        if (!hit[i]) out.push_back(bins[i]);
    }
    return out;
}

std::vector<ParamValue> unexplored_choices(
    const ParamDef& def, const std::vector<ParamValue>& tried) {
    std::vector<ParamValue> out;
    for (const auto& v : def.values) {
        bool seen = false;
        for (const auto& t : tried) {
            if (value_equal(v, t)) {
                seen = true;
                break;
            }
        }
        if (!seen) out.push_back(v);
    }
    return out;
}

StateReport summarize(const ExperimentLog& log, const SearchSpace& space,
                      const Goal& goal, int budget) {
    if (log.trials.empty()) {
        throw Error(Errc::kEmptyLog, "experiment log has no trials");
    }

    StateReport report;

    // Completed trials with the goal metric, in log order.
    std::vector<std::pair<int, double>> completed;
    for (const auto& t : log.trials) {
        if (t.result.status != TrialStatus::kCompleted) continue;
        if (auto m = t.result.final_metric(goal.metric_name)) {
            completed.emplace_back(t.index, *m);
        }
    }

    auto& sit = report.situation;
    sit.goal = goal;
    sit.trials_used = static_cast<int>(log.trials.size());
    sit.trials_budget = budget;
    std::vector<double> finals;
    finals.reserve(completed.size());
    for (const auto& [idx, m] : completed) finals.push_back(m);
    sit.trend = classify_trend(finals, goal.direction);
    if (!completed.empty()) {
        sit.current_metric = completed.back().second;
        size_t best_at = 0;
        for (size_t i = 1; i < completed.size(); ++i) {
            if (goal.better(completed[i].second, completed[best_at].second)) {
                best_at = i;
            }
        }
        sit.best_metric = completed[best_at].second;
        sit.best_index = completed[best_at].first;
        sit.gap_to_target = goal.direction == Direction::kMaximize
                                ? goal.target_value - *sit.best_metric
                                : *sit.best_metric - goal.target_value;
    }

    const TrialRecord& last = log.trials.back();
    auto& latest = report.latest;
    latest.index = last.index;
    latest.status = last.result.status;
    latest.config = last.config;
    latest.final_metrics = last.result.final_metrics;
    latest.failure_reason = last.result.failure_reason;
    bool have_epoch = false;
    EpochSummary es;
    for (const auto& e : last.result.epochs) {
        auto it = e.metrics.find(goal.metric_name);
        if (it == e.metrics.end()) continue;
        if (!have_epoch) {
            es.first = es.last = es.min = es.max = it->second;
            have_epoch = true;
        } else {
            es.last = it->second;
            es.min = std::min(es.min, it->second);
            es.max = std::max(es.max, it->second);
        }
    }
    if (have_epoch) latest.epoch_summary = es;

    const Configuration* best_config = nullptr;
    if (sit.best_index) {
        for (const auto& t : log.trials) {
            if (t.index == *sit.best_index) best_config = &t.config;
        }
    }

    for (const auto& def : space.params) {
        ParamAnalysis pa;
        pa.name = def.name;
        pa.definition = def;
        if (const auto* v = last.config.find(def.name)) pa.current_value = *v;
        if (best_config) {
            if (const auto* v = best_config->find(def.name)) {
                pa.best_value = *v;
            }
        }
        std::vector<double> tried_numeric;
        std::vector<ParamValue> tried_values;
        for (const auto& t : log.trials) {
            const auto* v = t.config.find(def.name);
            if (!v) continue;
            HistoryRow row;
            row.trial_index = t.index;
            row.value = *v;
            if (t.result.status == TrialStatus::kCompleted) {
                row.final_metric = t.result.final_metric(goal.metric_name);
            }
            pa.history.push_back(std::move(row));
            tried_values.push_back(*v);
            if (const auto* d = std::get_if<double>(v)) {
                tried_numeric.push_back(*d);
            }
        }
        if (def.is_numeric()) {
            pa.unexplored_ranges = unexplored_regions(def, tried_numeric);
        } else {
            pa.unexplored_choices = unexplored_choices(def, tried_values);
        }
        report.params.push_back(std::move(pa));
    }

    if (completed.size() >= 2) {
        PreviousComparison cmp;
        const auto [prev_idx, prev_metric] = completed[completed.size() - 2];
        const auto [cur_idx, cur_metric] = completed.back();
        cmp.previous_index = prev_idx;
        cmp.current_index = cur_idx;
        const Configuration* prev_cfg = nullptr;
        const Configuration* cur_cfg = nullptr;
        for (const auto& t : log.trials) {
            if (t.index == prev_idx) prev_cfg = &t.config;
            if (t.index == cur_idx) cur_cfg = &t.config;
        }
        for (const auto& def : space.params) {
            const auto* old_v = prev_cfg ? prev_cfg->find(def.name) : nullptr;
            const auto* new_v = cur_cfg ? cur_cfg->find(def.name) : nullptr;
            if (!old_v || !new_v) continue;
            if (value_equal(*old_v, *new_v)) {
                cmp.unchanged.push_back(def.name);
            } else {
                cmp.changed.emplace_back(def.name, *old_v, *new_v);
            }
        }
        cmp.metric_delta = cur_metric - prev_metric;
        if (goal.better(cur_metric, prev_metric)) {
            cmp.verdict = Verdict::kImproved;
        } else if (goal.better(prev_metric, cur_metric)) {
            cmp.verdict = Verdict::kWorsened;
        } else {
            cmp.verdict = Verdict::kNoChange;
        }
        report.comparison = cmp;
    }

    return report;
}

namespace {

std::string def_line(const ParamDef& def) {
    std::string out = def.name + ": ";
    if (def.kind == ParamKind::kChoice) {
        out += "choice of [";
        for (size_t i = 0; i < def.values.size(); ++i) {
            if (i) out += ", ";
            out += fmt_value(def.values[i], def.kind);
        }
        out += "]";
    } else {
        out += to_string(def.kind);
        out += ", ";
        out += to_string(def.scale);
        out += ", range [";
        out += fmt_value(def.low, def.kind);
        out += ", ";
        out += fmt_value(def.high, def.kind);
        out += "]";
    }
    if (def.fixed && def.fixed_value) {
        out += ", fixed at " + fmt_value(*def.fixed_value, def.kind);
    }
    return out;
}

std::string config_line(const Configuration& config, const SearchSpace* space) {
    std::string out;
    for (size_t i = 0; i < config.assignments.size(); ++i) {
        if (i) out += ", ";
        const auto& [name, value] = config.assignments[i];
        out += name + " = ";
        const ParamDef* def = space ? space->find(name) : nullptr;
        out += def ? fmt_value(value, def->kind) : fmt_value(value);
    }
    return out;
}

std::string signed_sig6(double v) {
    return v > 0.0 ? "+" + fmt_sig6(v) : fmt_sig6(v);
}

}  // namespace

std::string render_report(const StateReport& report) {
    const auto& sit = report.situation;
    const std::string& metric = sit.goal.metric_name;
    std::string out;

    out += "CURRENT SITUATION\n";
    out += "goal: ";
    out += to_string(sit.goal.direction);
    out += " " + metric + ", target " + fmt_sig6(sit.goal.target_value) + "\n";
    out += "trials: " + std::to_string(sit.trials_used) + " of " +
           std::to_string(sit.trials_budget) + " used\n";
    out += "current metric: " +
           (sit.current_metric ? fmt_sig6(*sit.current_metric)
                               : std::string("n/a")) +
           "\n";
    if (sit.best_metric) {
        out += "best metric: " + fmt_sig6(*sit.best_metric) + " (trial " +
               std::to_string(*sit.best_index) + ")\n";
    } else {
        out += "best metric: n/a\n";
    }
    out += "gap to target: " +
           (sit.gap_to_target ? fmt_sig6(*sit.gap_to_target)
                              : std::string("n/a")) +
           "\n";
    out += "trend: ";
    out += to_string(sit.trend);
    out += "\n";

    out += "\nLATEST EXPERIMENT\n";
    out += "trial " + std::to_string(report.latest.index) + ", status ";
    out += to_string(report.latest.status);
    out += "\n";

    // The config line resolves value formatting through the definitions
    // carried by the per-parameter analysis entries.
    SearchSpace space;
    for (const auto& pa : report.params) space.params.push_back(pa.definition);
    out += "config: " + config_line(report.latest.config, &space) + "\n";

    auto final_it = report.latest.final_metrics.find(metric);
    if (final_it != report.latest.final_metrics.end()) {
        out += "final " + metric + ": " + fmt_sig6(final_it->second) + "\n";
    } else {
        out += "final " + metric + ": not recorded\n";
    }
    if (!report.latest.failure_reason.empty()) {
        out += "failure: " + report.latest.failure_reason + "\n";
    }
    if (report.latest.epoch_summary) {
        const auto& es = *report.latest.epoch_summary;
        out += "epoch " + metric + ": first " + fmt_sig6(es.first) + ", last " +
               fmt_sig6(es.last) + ", min " + fmt_sig6(es.min) + ", max " +
               fmt_sig6(es.max) + "\n";
    } else {
        out += "epoch " + metric + ": none recorded\n";
    }

    out += "\nHYPERPARAMETER ANALYSIS\n";
    for (const auto& pa : report.params) {
        out += def_line(pa.definition) + "\n";
        out += "  current: " + fmt_value(pa.current_value, pa.definition.kind) +
               "\n";
        out += "  best so far: " +
               (pa.best_value ? fmt_value(*pa.best_value, pa.definition.kind)
                              : std::string("n/a")) +
               "\n";
        out += "  history:";
        if (pa.history.empty()) {
            out += " none";
        }
        for (size_t i = 0; i < pa.history.size(); ++i) {
            const auto& row = pa.history[i];
            out += i ? "; " : " ";
            out += "trial " + std::to_string(row.trial_index) + ": " +
                   fmt_value(row.value, pa.definition.kind) + " -> " +
                   (row.final_metric ? fmt_sig6(*row.final_metric)
                                     : std::string("failed"));
        }
        out += "\n";
        out += "  unexplored:";
        if (pa.definition.kind == ParamKind::kChoice) {
            if (pa.unexplored_choices.empty()) out += " none";
            for (size_t i = 0; i < pa.unexplored_choices.size(); ++i) {
                out += i ? ", " : " ";
                out += fmt_value(pa.unexplored_choices[i], ParamKind::kChoice);
            }
        } else {
            if (pa.unexplored_ranges.empty()) out += " none";
            for (size_t i = 0; i < pa.unexplored_ranges.size(); ++i) {
                out += i ? ", " : " ";
                out += "(" + fmt_shortest(pa.unexplored_ranges[i].low) + ", " +
                       fmt_shortest(pa.unexplored_ranges[i].high) + ")";
            }
        }
        out += "\n";
    }

    out += "\nPREVIOUS EXPERIMENT COMPARISON\n";
    if (!report.comparison) {
        out += "no previous experiment\n";
        return out;
    }
    const auto& cmp = *report.comparison;
    out += "trial " + std::to_string(cmp.current_index) + " vs trial " +
           std::to_string(cmp.previous_index) + "\n";
    out += "changed:";
    if (cmp.changed.empty()) out += " none";
    for (size_t i = 0; i < cmp.changed.size(); ++i) {
        const auto& [name, old_v, new_v] = cmp.changed[i];
        const ParamDef* def = nullptr;
        for (const auto& pa : report.params) {
            if (pa.name == name) def = &pa.definition;
        }
        ParamKind kind = def ? def->kind : ParamKind::kFloat;
        out += i ? "; " : " ";
        out += name + ": " + fmt_value(old_v, kind) + " -> " +
               fmt_value(new_v, kind);
    }
    out += "\n";
    out += "unchanged:";
    if (cmp.unchanged.empty()) out += " none";
    for (size_t i = 0; i < cmp.unchanged.size(); ++i) {
        out += i ? ", " : " ";
        out += cmp.unchanged[i];
    }
    out += "\n";
    out += "metric delta: " + signed_sig6(cmp.metric_delta) + "\n";
    out += "verdict: ";
    out += to_string(cmp.verdict);
    out += "\n";
    return out;
}

}  // namespace tcshpt
