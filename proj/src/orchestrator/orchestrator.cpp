#include "orchestrator/orchestrator.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "agents/agents.hpp"
#include "core/error.hpp"
#include "core/format.hpp"
#include "core/jsonl.hpp"
#include "tcs/report.hpp"

namespace tcshpt {
namespace {

bool is_scripted(const ChatBackend& backend) {
    return backend.name().rfind("scripted", 0) == 0;
}

ChatRequest make_request(const PromptPair& prompt, const std::string& model,
                         double temperature) {
    ChatRequest request;
    request.model = model;
    request.messages = {{Role::kSystem, prompt.system},
                        {Role::kUser, prompt.user}};
    request.temperature = temperature;
    return request;
}

// Retryable reply defects; transport failures propagate immediately.
bool unusable_reply(Errc code) {
    return code == Errc::kParseFailure || code == Errc::kInvalidChoice ||
           code == Errc::kMalformedValue || code == Errc::kUnknownParameter;
}

struct ProposalAttempt {
    Configuration config;
    std::string justification;
    Proposer proposer = Proposer::kLlm;
};

ProposalAttempt propose(const RunConfig& cfg, const PromptPair& prompt,
                        const Configuration* last, std::mt19937_64& rng) {
    std::string user = prompt.user;
    for (int attempt = 0; attempt <= cfg.fallback.max_retries; ++attempt) {
        auto request = make_request({prompt.system, user},
                                    cfg.optimizer_model, cfg.temperature);
        auto response = cfg.optimizer_backend->complete(request);
        try {
            auto proposal =
                parse_optimizer_response(response.content, cfg.space, last);
            return {std::move(proposal.config), std::move(proposal.reasoning),
                    is_scripted(*cfg.optimizer_backend) ? Proposer::kScripted
                                                        : Proposer::kLlm};
        } catch (const Error& e) {
            if (!unusable_reply(e.code())) throw;
            user += "\n\n" + corrective_instruction(e.what());
        }
    }
    if (cfg.fallback.on_exhaust == FallbackPolicy::OnExhaust::kAbort) {
        throw Error(Errc::kAborted,
                    "optimizer replies stayed unusable after " +
                        std::to_string(cfg.fallback.max_retries) +
                        " corrective retries");
    }
    return {sample_config(cfg.space, rng),
            "uniform random sample after unusable optimizer replies",
            Proposer::kFallbackRandom};
}

std::string raw_trials_json(const ExperimentLog& log) {
    Json array = Json::array();
    for (const auto& trial : log.trials) {
        array.push_back(to_json(trial));
    }
    return array.dump(2);
}

std::vector<double> best_so_far_curve(const ExperimentLog& log,
                                      const Goal& goal) {
    std::vector<double> curve;
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& trial : log.trials) {
        if (trial.result.status == TrialStatus::kCompleted) {
            auto metric = trial.result.final_metric(goal.metric_name);
            if (metric && (std::isnan(best) || goal.better(*metric, best))) {
                best = *metric;
            }
        }
        curve.push_back(best);
    }
    return curve;
}

ExperimentLog fresh_log(const RunConfig& cfg) {
    ExperimentLog log;
    log.run_id =
        std::string(to_string(cfg.mode)) + "-s" + std::to_string(cfg.seed);
    log.seed = cfg.seed;
    log.goal = cfg.goal;
    log.space = cfg.space;
    log.created_at = now_iso8601();
    return log;
}

RunOutcome finalize(const RunConfig& cfg, ExperimentLog log) {
    RunOutcome outcome;
    outcome.best = best_trial(log, cfg.goal);  // throws when nothing completed
    outcome.per_trial_best_so_far = best_so_far_curve(log, cfg.goal);
    outcome.log = std::move(log);
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        save_log(outcome.log, std::filesystem::path(cfg.output_dir) /
                                  (outcome.log.run_id + ".jsonl"));
    }
    return outcome;
}

RunOutcome run_agent_loop(const RunConfig& cfg,
                          const TrialCallback& on_trial) {
    if (!cfg.optimizer_backend || !cfg.analysis_backend) {
        throw Error(Errc::kInvalidExperiment,
                    "agent modes need optimizer and analysis backends");
    }
    ExperimentLog log = fresh_log(cfg);
    std::mt19937_64 rng(cfg.seed);

    AnalysisReport analysis = bootstrap_analysis(cfg.space, cfg.goal);
    std::optional<StateReport> report;
    const Configuration* last = nullptr;

    for (int t = 1; t <= cfg.trials; ++t) {
        auto optimizer_prompt = build_optimizer_prompt(
            report ? &*report : nullptr, analysis, cfg.space, cfg.goal);
        auto attempt = propose(cfg, optimizer_prompt, last, rng);

        TrialRecord trial;
        trial.config = std::move(attempt.config);
        trial.justification = std::move(attempt.justification);
        trial.proposer = attempt.proposer;
        trial.result = run_trial(cfg.objective, trial.config, cfg.goal);
        log.append(std::move(trial));
        last = &log.trials.back().config;
        if (on_trial) on_trial(log.trials.back());

        report = summarize(log, cfg.space, cfg.goal, cfg.trials);
        PromptPair analysis_prompt =
            cfg.mode == Mode::kTcs
                ? build_analysis_prompts(*report, cfg.space, cfg.goal)
                : build_analysis_prompts_raw(raw_trials_json(log), cfg.space,
                                             cfg.goal);
        auto response = cfg.analysis_backend->complete(make_request(
            analysis_prompt, cfg.analysis_model, cfg.temperature));
        analysis = parse_analysis_response(response.content);
    }
    return finalize(cfg, std::move(log));
}

}  // namespace

const char* to_string(Mode mode) {
    switch (mode) {
        case Mode::kTcs: return "tcs";
        case Mode::kNoTcs: return "no-tcs";
        case Mode::kRandom: return "random";
    }
    return "tcs";
}

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

ParamValue sample_param(const ParamDef& def, std::mt19937_64& rng) {
    if (def.fixed && def.fixed_value) return *def.fixed_value;
    double u = unit_draw(rng);
    switch (def.kind) {
        case ParamKind::kChoice: {
            auto index = static_cast<size_t>(u * def.values.size());
            if (index >= def.values.size()) index = def.values.size() - 1;
            return def.values[index];
        }
        case ParamKind::kInt: {
            // uniform over the integer grid, whatever the scale
            double count = def.high - def.low + 1.0;
            double offset = std::floor(u * count);
            if (offset >= count) offset = count - 1.0;
            return ParamValue(def.low + offset);
        }
        case ParamKind::kFloat:
            if (def.scale == Scale::kLog) {
                double lo = std::log(def.low);
                double hi = std::log(def.high);
                return ParamValue(std::exp(lo + u * (hi - lo)));
            }
            return ParamValue(def.low + u * (def.high - def.low));
    }
    return ParamValue(def.low);
}

Configuration sample_config(const SearchSpace& space, std::mt19937_64& rng) {
    Configuration config;
    for (const auto& def : space.params) {
        config.assignments.emplace_back(def.name, sample_param(def, rng));
    }
    return config;
}

RunOutcome random_search(const RunConfig& cfg, const TrialCallback& on_trial) {
    ExperimentLog log = fresh_log(cfg);
    std::mt19937_64 rng(cfg.seed);
    for (int t = 1; t <= cfg.trials; ++t) {
        TrialRecord trial;
        trial.config = sample_config(cfg.space, rng);
        trial.justification = "uniform random sample";
        trial.proposer = Proposer::kFallbackRandom;
        trial.result = run_trial(cfg.objective, trial.config, cfg.goal);
        log.append(std::move(trial));
        if (on_trial) on_trial(log.trials.back());
    }
    return finalize(cfg, std::move(log));
}

RunOutcome run_hpt(const RunConfig& cfg, const TrialCallback& on_trial) {
    if (cfg.trials < 1) {
        throw Error(Errc::kInvalidExperiment, "trials must be at least 1");
    }
    cfg.space.validate();
    if (cfg.mode == Mode::kRandom) return random_search(cfg, on_trial);
    return run_agent_loop(cfg, on_trial);
}

std::string config_hash(const RunConfig& cfg) {
    Json j{{"goal", to_json(cfg.goal)},
           {"space", to_json(cfg.space)},
           {"mode", to_string(cfg.mode)},
           {"trials", cfg.trials},
           {"runs", cfg.runs},
           {"seed", cfg.seed},
           {"temperature", cfg.temperature},
           {"optimizer_model", cfg.optimizer_model},
           {"analysis_model", cfg.analysis_model},
           {"optimizer_backend", cfg.optimizer_backend
                                     ? cfg.optimizer_backend->name()
                                     : ""},
           {"analysis_backend",
            cfg.analysis_backend ? cfg.analysis_backend->name() : ""}};
    if (cfg.objective.kind == Objective::Kind::kBuiltin) {
        j["objective"] = cfg.objective.builtin_name;
    } else if (cfg.objective.command) {
        j["objective"] = cfg.objective.command->argv;
    }
    const std::string canonical = j.dump();
    std::uint64_t hash = 1469598103934665603ull;  // FNV-1a 64-bit
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(hash));
    return buffer;
}

namespace {

void write_manifest(const RunConfig& cfg, const AggregateOutcome& aggregate,
                    bool aborted) {
    if (cfg.output_dir.empty()) return;
    std::filesystem::create_directories(cfg.output_dir);
    Json runs = Json::array();
    for (const auto& outcome : aggregate.outcomes) {
        runs.push_back(
            {{"run_id", outcome.log.run_id},
             {"seed", outcome.log.seed},
             {"best_trial", outcome.best.index},
             {"best_metric",
              *outcome.best.result.final_metric(cfg.goal.metric_name)},
             {"log", outcome.log.run_id + ".jsonl"}});
    }
    Json manifest{{"config_hash", config_hash(cfg)},
                  {"mode", to_string(cfg.mode)},
                  {"trials", cfg.trials},
                  {"seeds", [&] {
                       Json seeds = Json::array();
                       for (int k = 0; k < cfg.runs; ++k) {
                           seeds.push_back(cfg.seed + k);
                       }
                       return seeds;
                   }()},
                  {"runs", std::move(runs)},
                  {"mean_best", aggregate.mean_best},
                  {"std_best", aggregate.std_best},
                  {"degenerate_std", aggregate.degenerate_std}};
    if (aborted) manifest["aborted"] = true;
    std::ofstream out(std::filesystem::path(cfg.output_dir) /
                      "manifest.json");
    out << manifest.dump(2) << "\n";
}

void aggregate_stats(const RunConfig& cfg, AggregateOutcome& aggregate) {
    std::vector<double> bests;
    for (const auto& outcome : aggregate.outcomes) {
        bests.push_back(
            *outcome.best.result.final_metric(cfg.goal.metric_name));
    }
    if (bests.empty()) return;
    double sum = 0.0;
    for (double b : bests) sum += b;
    aggregate.mean_best = sum / static_cast<double>(bests.size());
    if (bests.size() < 2) {
        aggregate.std_best = 0.0;
        aggregate.degenerate_std = true;
        return;
    }
    double ss = 0.0;
    for (double b : bests) {
        ss += (b - aggregate.mean_best) * (b - aggregate.mean_best);
    }
    aggregate.std_best =
        std::sqrt(ss / static_cast<double>(bests.size() - 1));
}

}  // namespace

AggregateOutcome repeat_runs(const RunConfig& cfg,
                             const TrialCallback& on_trial) {
    if (cfg.runs < 1) {
        throw Error(Errc::kInvalidExperiment, "runs must be at least 1");
    }
    AggregateOutcome aggregate;
    for (int k = 0; k < cfg.runs; ++k) {
        RunConfig run_cfg = cfg;
        run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(k);
        try {
            aggregate.outcomes.push_back(run_hpt(run_cfg, on_trial));
        } catch (const Error&) {
            aggregate_stats(cfg, aggregate);
            write_manifest(cfg, aggregate, /*aborted=*/true);
            throw;
        }
    }
    aggregate_stats(cfg, aggregate);
    write_manifest(cfg, aggregate, /*aborted=*/false);
    return aggregate;
}

}  // namespace tcshpt
