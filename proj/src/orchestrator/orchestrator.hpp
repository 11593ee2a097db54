#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "backend/chat.hpp"
#include "core/types.hpp"
#include "executor/executor.hpp"

namespace tcshpt {

// TCS is the full loop: every iteration the trial history is compressed
// into a structured report before the analysis agent sees it. NO_TCS feeds
// the raw serialized trial records instead, with the same number of backend
// calls, so the two modes differ only in context quality. RANDOM draws
// configurations from the seeded sampler and never talks to a backend.
enum class Mode { kTcs, kNoTcs, kRandom };

const char* to_string(Mode mode);

struct FallbackPolicy {
    enum class OnExhaust { kRandomSample, kAbort };

    int max_retries = 2;  // corrective re-asks after an unusable reply
    OnExhaust on_exhaust = OnExhaust::kRandomSample;
};

struct RunConfig {
    Goal goal;
    SearchSpace space;
    Objective objective;
    std::shared_ptr<ChatBackend> optimizer_backend;
    std::shared_ptr<ChatBackend> analysis_backend;
    std::string optimizer_model;
    std::string analysis_model;
    double temperature = 0.2;
    int trials = 10;
    int runs = 5;
    std::uint64_t seed = 0;
    Mode mode = Mode::kTcs;
    FallbackPolicy fallback;
    std::string output_dir;  // empty: keep everything in memory
};

struct RunOutcome {
    ExperimentLog log;
    TrialRecord best;
    // Entry t is the best goal metric over trials 1..t+1; NaN until the
    // first completed trial.
    std::vector<double> per_trial_best_so_far;
};

struct AggregateOutcome {
    std::vector<RunOutcome> outcomes;
    double mean_best = 0.0;
    double std_best = 0.0;  // sample standard deviation, n-1 denominator
    bool degenerate_std = false;  // true when runs == 1
};

using TrialCallback = std::function<void(const TrialRecord&)>;

// Uniform draw in [0, 1) using the top 53 bits of the engine's output; the
// sampling pipeline never uses std distributions, so sequences are
// identical across standard libraries.
double unit_draw(std::mt19937_64& rng);

ParamValue sample_param(const ParamDef& def, std::mt19937_64& rng);
Configuration sample_config(const SearchSpace& space, std::mt19937_64& rng);

// One full optimization run at cfg.seed. Modes TCS and NO_TCS drive the
// two-agent loop; RANDOM delegates to random_search. Writes
// "<output_dir>/<run_id>.jsonl" when an output directory is set. Throws
// Error(kAborted) when an unusable optimizer reply meets
// OnExhaust::kAbort, and Error(kNoCompletedTrials) when every trial fails.
RunOutcome run_hpt(const RunConfig& cfg, const TrialCallback& on_trial = {});

// Seeded random-search baseline; no backend calls.
RunOutcome random_search(const RunConfig& cfg,
                         const TrialCallback& on_trial = {});

// cfg.runs independent runs with seeds seed, seed+1, ...; aggregates the
// per-run best metrics. Writes "<output_dir>/manifest.json" when an output
// directory is set, also on abort with the partial results.
AggregateOutcome repeat_runs(const RunConfig& cfg,
                             const TrialCallback& on_trial = {});

// FNV-1a hash of the canonical run settings (backends by name, wall-clock
// fields excluded), hex-encoded; stamped into the manifest.
std::string config_hash(const RunConfig& cfg);

}  // namespace tcshpt
