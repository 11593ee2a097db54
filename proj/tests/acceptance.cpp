// Acceptance gate: one line per criterion, PASS/FAIL/SKIP, non-zero exit on
// any failure. Each criterion enforces its own wall-clock budget.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "agents/agents.hpp"
#include "backend/http.hpp"
#include "backend/scripted.hpp"
#include "config/experiment.hpp"
#include "core/error.hpp"
#include "core/jsonl.hpp"
#include "core/validate.hpp"
#include "executor/executor.hpp"
#include "orchestrator/orchestrator.hpp"
#include "tcs/report.hpp"

using namespace tcshpt;
namespace fs = std::filesystem;

namespace {

int failures = 0;

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
    if (!condition) throw CheckFailure(message);
}

void criterion(int index, const char* label, double budget_s,
               const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
        body();
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        if (elapsed > budget_s) {
            std::printf("FAIL  %d: %s (took %.2fs, budget %.0fs)\n", index,
                        label, elapsed, budget_s);
            ++failures;
            return;
        }
        std::printf("PASS  %d: %s (%.2fs)\n", index, label, elapsed);
    } catch (const std::exception& e) {
        std::printf("FAIL  %d: %s (%s)\n", index, label, e.what());
        ++failures;
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path golden_dir() { return fs::path(TESTS_DIR) / "golden"; }

std::shared_ptr<ChatBackend> policy_backend(const std::string& name) {
    return std::make_shared<PolicyBackend>(name, make_policy(name));
}

double final_goal_metric(const TrialRecord& trial, const Goal& goal) {
    const auto metric = trial.result.final_metric(goal.metric_name);
    require(metric.has_value(), "trial lacks the goal metric");
    return *metric;
}

RunConfig quadratic_config(Mode mode, std::uint64_t seed,
                           const std::string& policy) {
    RunConfig cfg;
    cfg.goal = Goal{"objective", Direction::kMinimize, 0.0};
    cfg.space = list_builtins().at(0).space_template;
    cfg.objective.kind = Objective::Kind::kBuiltin;
    cfg.objective.builtin_name = "quadratic_2_3";
    cfg.mode = mode;
    cfg.seed = seed;
    cfg.trials = 10;
    cfg.runs = 1;
    if (mode != Mode::kRandom) {
        cfg.optimizer_backend = policy_backend(policy);
        cfg.analysis_backend = policy_backend(policy);
    }
    return cfg;
}

// Delegates to the coordinate-search policy but replaces 3 of every 10
// optimizer replies with prose no parser can use; analysis prompts always
// succeed. Models an LLM that goes off the rails 30% of the time.
class FlakyBackend : public ChatBackend {
public:
    ChatResponse complete(const ChatRequest& request) override {
        const std::string& user = request.messages.back().content;
        const bool optimizer = user.find("## Your Task") != std::string::npos;
        if (optimizer) {
            ++optimizer_calls_;
            const int phase = optimizer_calls_ % 10;
            if (phase >= 3 && phase <= 5) {
                ChatResponse garbage;
                garbage.content =
                    "As a language model I would rather discuss poetry.";
                garbage.model = "flaky";
                return garbage;
            }
        }
        return inner_->complete(request);
    }
    std::string name() const override { return "scripted:flaky"; }

private:
    std::shared_ptr<ChatBackend> inner_ =
        policy_backend("coordinate-search");
    int optimizer_calls_ = 0;
};

ExperimentLog strip_times(ExperimentLog log) {
    log.created_at.clear();
    for (auto& trial : log.trials) trial.result.wall_time_s = 0.0;
    return log;
}

}  // namespace

int main() {
    criterion(1, "summarizer determinism against the golden report", 1.0, [] {
        const ExperimentLog log =
            load_log(golden_dir() / "acceptance_log.jsonl");
        require(log.trials.size() == 10, "golden log must hold 10 trials");
        const std::string golden =
            read_file(golden_dir() / "acceptance_report.txt");
        for (int i = 0; i < 100; ++i) {
            const std::string rendered = render_report(
                summarize(log, log.space, log.goal,
                          static_cast<int>(log.trials.size())));
            require(rendered == golden,
                    "rendered report deviates from the golden file");
        }
    });

    criterion(2, "quadratic ablation: tcs converges, no-tcs stalls", 5.0, [] {
        const ExperimentLog golden =
            load_log(golden_dir() / "acceptance_log.jsonl");

        const RunOutcome tcs = run_hpt(
            quadratic_config(Mode::kTcs, 42, "coordinate-search"));
        require(tcs.log.trials.size() == 10, "tcs run must use 10 trials");
        const double best = final_goal_metric(tcs.best, tcs.log.goal);
        require(best <= 0.25, "tcs best exceeds 0.25");
        for (size_t i = 0; i < 10; ++i) {
            require(tcs.log.trials[i].config == golden.trials[i].config,
                    "tcs trajectory deviates from the golden trajectory");
            require(final_goal_metric(tcs.log.trials[i], tcs.log.goal) ==
                        final_goal_metric(golden.trials[i], golden.goal),
                    "tcs metrics deviate from the golden trajectory");
        }

        const RunOutcome naive = run_hpt(
            quadratic_config(Mode::kNoTcs, 42, "naive-midpoint"));
        require(naive.log.trials.size() == 10,
                "no-tcs run must use 10 trials");
        for (const auto& trial : naive.log.trials) {
            require(trial.config == naive.log.trials.front().config,
                    "no-tcs run was expected to stall at its first value");
        }
        for (size_t t = 2; t < 10; ++t) {
            require(tcs.per_trial_best_so_far[t] <
                        naive.per_trial_best_so_far[t],
                    "tcs must strictly dominate from trial 3 onward");
        }
    });

    criterion(3, "best-trial selection equals a brute-force scan", 10.0, [] {
        std::mt19937_64 rng(2026);
        for (int round = 0; round < 1000; ++round) {
            Goal goal;
            goal.metric_name = "m";
            goal.direction = (rng() & 1) ? Direction::kMaximize
                                         : Direction::kMinimize;
            ExperimentLog log;
            log.goal = goal;
            const int n = 1 + static_cast<int>(rng() % 12);
            for (int i = 1; i <= n; ++i) {
                TrialRecord trial;
                trial.index = i;
                // Coarse grid forces ties so the tie-break rule is hit.
                const double value =
                    std::floor(unit_draw(rng) * 20.0) / 2.0;
                if (unit_draw(rng) < 0.7) {
                    trial.result.status = TrialStatus::kCompleted;
                    trial.result.final_metrics["m"] = value;
                } else {
                    trial.result.status = TrialStatus::kFailed;
                    trial.result.failure_reason = "exit code 1";
                }
                log.trials.push_back(std::move(trial));
            }

            const TrialRecord* expected = nullptr;
            for (const auto& trial : log.trials) {
                if (trial.result.status != TrialStatus::kCompleted) continue;
                const auto metric = trial.result.final_metric("m");
                if (!metric) continue;
                if (expected == nullptr) {
                    expected = &trial;
                    continue;
                }
                const double incumbent =
                    *expected->result.final_metric("m");
                const bool better =
                    goal.direction == Direction::kMaximize
                        ? *metric > incumbent
                        : *metric < incumbent;
                if (better) expected = &trial;
            }

            if (expected == nullptr) {
                try {
                    best_trial(log, goal);
                    require(false, "all-failed log must throw");
                } catch (const Error& e) {
                    require(e.code() == Errc::kNoCompletedTrials,
                            "wrong error for all-failed log");
                }
            } else {
                require(best_trial(log, goal).index == expected->index,
                        "best trial differs from brute force");
            }
        }
    });

    criterion(4, "hyperparameter line round-trip and literal form", 5.0, [] {
        std::mt19937_64 rng(7);
        const std::vector<std::string> tokens = {"adam", "sgd", "relu",
                                                 "gelu", "silu"};
        for (int round = 0; round < 1000; ++round) {
            SearchSpace space;
            const int n_params = 2 + static_cast<int>(rng() % 5);
            for (int p = 0; p < n_params; ++p) {
                ParamDef def;
                def.name = "p" + std::to_string(p);
                switch (rng() % 4) {
                    case 0:
                        def.kind = ParamKind::kFloat;
                        def.low = -5.0 + 10.0 * unit_draw(rng);
                        def.high = def.low + 0.5 + 10.0 * unit_draw(rng);
                        break;
                    case 1:
                        def.kind = ParamKind::kFloat;
                        def.scale = Scale::kLog;
                        def.low = std::pow(10.0, -6.0 + 3.0 * unit_draw(rng));
                        def.high = def.low * std::pow(10.0, 1.0 + 3.0 *
                                                      unit_draw(rng));
                        break;
                    case 2:
                        def.kind = ParamKind::kInt;
                        def.low = static_cast<double>(rng() % 50);
                        def.high = def.low + 1.0 +
                                   static_cast<double>(rng() % 200);
                        break;
                    default:
                        def.kind = ParamKind::kChoice;
                        def.values = {tokens[rng() % tokens.size()],
                                      tokens[rng() % tokens.size()] + "_v2",
                                      static_cast<double>(rng() % 64)};
                        break;
                }
                if (p > 0 && unit_draw(rng) < 0.2) {
                    def.fixed = true;
                    def.fixed_value = def.midpoint();
                }
                space.params.push_back(std::move(def));
            }
            space.validate();

            const Configuration config = sample_config(space, rng);
            const std::string line =
                render_hyperparameters_line(config, space);
            const Proposal parsed = parse_optimizer_response(line, space);
            require(parsed.config == config,
                    "round-tripped configuration differs");
        }

        SearchSpace lr_space;
        ParamDef lr;
        lr.name = "learning_rate";
        lr.kind = ParamKind::kFloat;
        lr.scale = Scale::kLog;
        lr.low = 1e-5;
        lr.high = 0.1;
        lr_space.params.push_back(lr);
        const Proposal literal = parse_optimizer_response(
            "hyperparameters: learning_rate=0.005", lr_space);
        require(std::get<double>(*literal.config.find("learning_rate")) ==
                    0.005,
                "literal learning_rate=0.005 must parse exactly");
    });

    criterion(5, "random search reproducibility and decade split", 10.0, [] {
        RunConfig cfg = quadratic_config(Mode::kRandom, 5, "");
        const ExperimentLog first = strip_times(random_search(cfg).log);
        const ExperimentLog second = strip_times(random_search(cfg).log);
        require(first.trials.size() == 10, "random run must use 10 trials");
        require(first.trials == second.trials,
                "same seed must reproduce the identical log");

        ParamDef def;
        def.name = "lr";
        def.kind = ParamKind::kFloat;
        def.scale = Scale::kLog;
        def.low = 1e-5;
        def.high = 1e-1;
        std::mt19937_64 rng(99);
        int buckets[4] = {0, 0, 0, 0};
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) {
            const double v = std::get<double>(sample_param(def, rng));
            require(v >= def.low && v <= def.high, "sample out of range");
            if (v < 1e-4) {
                ++buckets[0];
            } else if (v < 1e-3) {
                ++buckets[1];
            } else if (v < 1e-2) {
                ++buckets[2];
            } else {
                ++buckets[3];
            }
        }
        for (int b = 0; b < 4; ++b) {
            require(buckets[b] >= 2300 && buckets[b] <= 2700,
                    "decade " + std::to_string(b) + " holds " +
                        std::to_string(buckets[b]) +
                        " of 10000 samples, outside 25% +- 2%");
        }
    });

    criterion(6, "bins tile every numeric range exactly", 5.0, [] {
        std::mt19937_64 rng(11);
        for (int round = 0; round < 1000; ++round) {
            ParamDef def;
            def.name = "p";
            def.kind = (rng() & 1) ? ParamKind::kFloat : ParamKind::kInt;
            if (rng() & 1) {
                def.scale = Scale::kLog;
                const double mantissa_low = 1.0 + 8.0 * unit_draw(rng);
                const double mantissa_high = 1.0 + 8.0 * unit_draw(rng);
                const int exp_low = -8 + static_cast<int>(rng() % 10);
                const int exp_high =
                    exp_low + 1 + static_cast<int>(rng() % 6);
                def.low = mantissa_low * std::pow(10.0, exp_low);
                def.high = mantissa_high * std::pow(10.0, exp_high);
                if (def.kind == ParamKind::kInt) {
                    def.low = std::max(1.0, std::round(def.low));
                    def.high = std::max(def.low + 1.0, std::round(def.high));
                }
            } else {
                def.scale = Scale::kLinear;
                def.low = -100.0 + 200.0 * unit_draw(rng);
                def.high = def.low + 0.5 + 100.0 * unit_draw(rng);
                if (def.kind == ParamKind::kInt) {
                    def.low = std::round(def.low);
                    def.high = def.low + 1.0 +
                               static_cast<double>(rng() % 100);
                }
            }

            const std::vector<Bin> bins = partition_bins(def);
            require(!bins.empty(), "no bins produced");
            require(bins.front().low == def.low,
                    "first bin must start at the range low");
            require(bins.back().high == def.high,
                    "last bin must end at the range high");
            for (size_t i = 0; i < bins.size(); ++i) {
                require(bins[i].low < bins[i].high, "bin is empty");
                if (i + 1 < bins.size()) {
                    require(bins[i].high == bins[i + 1].low,
                            "adjacent bins must share their boundary");
                }
            }
        }
    });

    criterion(7, "loop survives 30% unusable optimizer replies", 5.0, [] {
        RunConfig cfg = quadratic_config(Mode::kTcs, 1, "coordinate-search");
        cfg.optimizer_backend = std::make_shared<FlakyBackend>();
        cfg.analysis_backend = policy_backend("coordinate-search");

        const RunOutcome outcome = run_hpt(cfg);
        require(outcome.log.trials.size() == 10,
                "run must still complete 10 trials");
        int fallbacks = 0;
        for (size_t i = 0; i < outcome.log.trials.size(); ++i) {
            const TrialRecord& trial = outcome.log.trials[i];
            require(trial.index == static_cast<int>(i) + 1,
                    "trial indices must stay contiguous");
            require(trial.result.status == TrialStatus::kCompleted,
                    "quadratic trials cannot fail");
            if (trial.proposer == Proposer::kFallbackRandom) {
                ++fallbacks;
                require(trial.justification.find("uniform random sample") !=
                            std::string::npos,
                        "fallback trials must say how they were proposed");
            }
        }
        require(fallbacks >= 1,
                "three consecutive unusable replies must trigger the "
                "random fallback");
    });

    criterion(8, "aggregation matches an independent mean/std oracle", 10.0,
              [] {
        RunConfig cfg = quadratic_config(Mode::kRandom, 77, "");
        cfg.runs = 5;
        const AggregateOutcome aggregate = repeat_runs(cfg);
        require(aggregate.outcomes.size() == 5, "expected 5 runs");
        require(!aggregate.degenerate_std, "5 runs have a real spread");

        std::vector<long double> bests;
        for (const auto& outcome : aggregate.outcomes) {
            bests.push_back(final_goal_metric(
                best_trial(outcome.log, outcome.log.goal),
                outcome.log.goal));
        }
        long double mean = 0.0L;
        for (const long double b : bests) mean += b;
        mean /= static_cast<long double>(bests.size());
        long double acc = 0.0L;
        for (const long double b : bests) acc += (b - mean) * (b - mean);
        const long double std_dev =
            std::sqrt(acc / static_cast<long double>(bests.size() - 1));

        const auto close = [](double actual, long double expected) {
            const long double scale =
                std::max<long double>(1.0L, std::fabs(expected));
            return std::fabs(actual - expected) <= 1e-12L * scale;
        };
        require(close(aggregate.mean_best, mean),
                "mean deviates from the oracle");
        require(close(aggregate.std_best, std_dev),
                "std deviates from the oracle");
    });

    const char* live_url = std::getenv("TCSHPT_LIVE_BASE_URL");
    if (live_url == nullptr || *live_url == '\0') {
        std::printf(
            "SKIP  9: live endpoint smoke test "
            "(set TCSHPT_LIVE_BASE_URL to enable)\n");
    } else {
        criterion(9, "live 3-trial run against a real endpoint", 600.0, [&] {
            HttpOptions options;
            options.base_url = live_url;
            if (const char* key_env =
                    std::getenv("TCSHPT_LIVE_API_KEY_ENV")) {
                if (const char* key = std::getenv(key_env)) {
                    options.api_key = key;
                }
            }
            const char* backend_kind = std::getenv("TCSHPT_LIVE_BACKEND");
            const char* model = std::getenv("TCSHPT_LIVE_MODEL");
            std::shared_ptr<ChatBackend> backend;
            if (backend_kind != nullptr &&
                std::string(backend_kind) == "ollama") {
                backend = std::make_shared<OllamaBackend>(options);
            } else {
                backend = std::make_shared<OpenAiBackend>(options);
            }

            RunConfig cfg = quadratic_config(Mode::kTcs, 0, "");
            cfg.optimizer_backend = backend;
            cfg.analysis_backend = backend;
            cfg.optimizer_model = model != nullptr ? model : "llama3.2";
            cfg.analysis_model = cfg.optimizer_model;
            cfg.trials = 3;

            const RunOutcome outcome = run_hpt(cfg);
            require(outcome.log.trials.size() == 3,
                    "live run must complete 3 trials");
        });
    }

    if (failures != 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
