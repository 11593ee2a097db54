#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "core/types.hpp"

namespace tcshpt {

enum class Trend { kImproving, kStagnating, kDeclining, kInsufficientData };

const char* to_string(Trend t);

// Half-open range (low, high], except the first bin of a partition which
// also contains its own low endpoint.
struct Bin {
    double low = 0.0;
    double high = 0.0;

    bool operator==(const Bin&) const = default;
};

struct EpochSummary {
    double first = 0.0;
    double last = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct CurrentSituation {
    Goal goal;
    // Latest completed trial's final metric; absent when nothing completed.
    std::optional<double> current_metric;
    std::optional<double> best_metric;
    std::optional<int> best_index;
    // target - best for MAXIMIZE, best - target for MINIMIZE.
    std::optional<double> gap_to_target;
    Trend trend = Trend::kInsufficientData;
    int trials_used = 0;
    int trials_budget = 0;
};

struct LatestExperiment {
    int index = 0;
    TrialStatus status = TrialStatus::kCompleted;
    Configuration config;
    std::map<std::string, double> final_metrics;
    std::string failure_reason;
    // Goal metric across the trial's epochs; absent when never reported.
    std::optional<EpochSummary> epoch_summary;
};

struct HistoryRow {
    int trial_index = 0;
    ParamValue value;
    std::optional<double> final_metric;  // absent for FAILED trials
};

struct ParamAnalysis {
    std::string name;
    ParamDef definition;
    ParamValue current_value;
    // Value this parameter took in the best trial; absent when nothing
    // completed yet.
    std::optional<ParamValue> best_value;
    std::vector<HistoryRow> history;  // strictly increasing trial index
    std::vector<Bin> unexplored_ranges;       // numeric kinds
    std::vector<ParamValue> unexplored_choices;  // CHOICE kind
};

enum class Verdict { kImproved, kWorsened, kNoChange };

const char* to_string(Verdict v);

// Latest completed trial against the completed trial before it.
struct PreviousComparison {
    int previous_index = 0;
    int current_index = 0;
    std::vector<std::tuple<std::string, ParamValue, ParamValue>> changed;
    std::vector<std::string> unchanged;
    double metric_delta = 0.0;  // current minus previous, raw
    Verdict verdict = Verdict::kNoChange;
};

struct StateReport {
    CurrentSituation situation;
    LatestExperiment latest;
    std::vector<ParamAnalysis> params;  // space order, one entry per param
    std::optional<PreviousComparison> comparison;
};

// Pure summarization of a trial log. No clock, no randomness: equal inputs
// give equal reports. Throws Error(kEmptyLog) on a log without trials.
StateReport summarize(const ExperimentLog& log, const SearchSpace& space,
                      const Goal& goal, int budget);

// Trend over completed final metrics, in log order. Fewer than 2 values ->
// INSUFFICIENT_DATA; otherwise the mean of the last min(3, n-1) deltas,
// sign-flipped for MINIMIZE, against +-0.005 * |best final|.
Trend classify_trend(const std::vector<double>& finals, Direction direction);

// Partition of [low, high] for a numeric parameter: one bin per decade on
// LOG scale (partial leading/trailing decades are their own bins), 4 equal
// bins on LINEAR scale. Bins tile the range exactly.
std::vector<Bin> partition_bins(const ParamDef& def);

// Bins containing no tried value, ascending. Boundary values belong to the
// lower of the two adjacent bins.
std::vector<Bin> unexplored_regions(const ParamDef& def,
                                    const std::vector<double>& tried);

// Untried CHOICE values, in definition order.
std::vector<ParamValue> unexplored_choices(const ParamDef& def,
                                           const std::vector<ParamValue>& tried);

// Canonical plain-text rendering. Fixed headers and field order, reals with
// 6 significant digits, '\n' only. Byte-identical for equal reports.
std::string render_report(const StateReport& report);

}  // namespace tcshpt
