#include "tcshpt/tcshpt.h"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agents/agents.hpp"
#include "config/experiment.hpp"
#include "core/error.hpp"
#include "core/format.hpp"
#include "core/jsonl.hpp"
#include "orchestrator/orchestrator.hpp"
#include "tcs/report.hpp"

using tcshpt::AggregateOutcome;
using tcshpt::Errc;
using tcshpt::Error;
using tcshpt::ExperimentFile;
using tcshpt::ExperimentLog;
using tcshpt::ParamValue;

struct tcshpt_experiment {
    ExperimentFile file;
};

struct tcshpt_result {
    AggregateOutcome outcome;
};

struct tcshpt_log {
    ExperimentLog log;
};

struct tcshpt_probe {
    // Formatted value per attempt; empty optional marks an invalid reply.
    std::vector<std::optional<std::string>> values;
};

namespace {

// Strings handed to the caller use malloc so tcshpt_string_free stays a
// plain free() regardless of how the library was built.
char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_error(char** err_msg, const std::string& message) {
    if (err_msg != nullptr) *err_msg = dup_string(message);
}

tcshpt_status status_of(Errc code) {
    switch (code) {
        case Errc::kIoError:
        case Errc::kEmptyLog:
            return TCSHPT_ERR_IO;
        case Errc::kInvalidExperiment:
        case Errc::kInvalidSpace:
        case Errc::kUnknownParameter:
        case Errc::kInvalidChoice:
        case Errc::kMalformedValue:
            return TCSHPT_ERR_VALIDATION;
        case Errc::kTimeout:
        case Errc::kHttpError:
        case Errc::kEmptyResponse:
        case Errc::kScriptExhausted:
        case Errc::kBackendUnavailable:
        case Errc::kParseFailure:
            return TCSHPT_ERR_BACKEND;
        case Errc::kNoCompletedTrials:
        case Errc::kObjectiveNotFound:
        case Errc::kCommandTimeout:
        case Errc::kProtocolViolation:
        case Errc::kAborted:
            return TCSHPT_ERR_RUNTIME;
    }
    return TCSHPT_ERR_RUNTIME;
}

template <typename Fn>
tcshpt_status guarded(char** err_msg, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        set_error(err_msg, e.what());
        return status_of(e.code());
    } catch (const std::exception& e) {
        set_error(err_msg, e.what());
        return TCSHPT_ERR_RUNTIME;
    }
}

std::string format_value(const ParamValue& value) {
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    return tcshpt::fmt_shortest(std::get<double>(value));
}

}  // namespace

extern "C" {

const char* tcshpt_version(void) { return "1.0.0"; }

void tcshpt_string_free(char* s) { std::free(s); }

tcshpt_status tcshpt_experiment_load(const char* path,
                                     tcshpt_experiment** out,
                                     char** err_msg) {
    if (path == nullptr || out == nullptr) {
        set_error(err_msg, "path and out must not be NULL");
        return TCSHPT_ERR_ARGUMENT;
    }
    return guarded(err_msg, [&] {
        auto handle = std::make_unique<tcshpt_experiment>();
        handle->file = tcshpt::load_experiment(path);
        *out = handle.release();
        return TCSHPT_OK;
    });
}

tcshpt_status tcshpt_experiment_override(tcshpt_experiment* exp,
                                         const char* key, const char* value,
                                         char** err_msg) {
    if (exp == nullptr || key == nullptr || value == nullptr) {
        set_error(err_msg, "exp, key and value must not be NULL");
        return TCSHPT_ERR_ARGUMENT;
    }
    return guarded(err_msg, [&] {
        const std::string k = key;
        const std::string v = value;
        tcshpt::Overrides o;
        if (k == "trials" || k == "runs" || k == "seed") {
            errno = 0;
            char* end = nullptr;
            const long long n = std::strtoll(v.c_str(), &end, 10);
            if (errno != 0 || end == v.c_str() || *end != '\0' || n < 0) {
                throw Error(Errc::kInvalidExperiment,
                            k + " must be a non-negative integer, got \"" +
                                v + "\"");
            }
            if (k == "trials") o.trials = static_cast<int>(n);
            if (k == "runs") o.runs = static_cast<int>(n);
            if (k == "seed") o.seed = static_cast<std::uint64_t>(n);
        } else if (k == "mode") {
            o.mode = v;
        } else if (k == "backend") {
            o.backend = v;
        } else if (k == "model") {
            o.model = v;
        } else if (k == "output_dir") {
            o.output_dir = v;
        } else {
            throw Error(Errc::kInvalidExperiment,
                        "unknown override key \"" + k + "\"");
        }
        tcshpt::apply_overrides(exp->file, o);
        return TCSHPT_OK;
    });
}

void tcshpt_experiment_free(tcshpt_experiment* exp) { delete exp; }

tcshpt_status tcshpt_run(tcshpt_experiment* exp,
                         tcshpt_trial_callback callback, void* user_data,
                         tcshpt_result** out, char** err_msg) {
    if (exp == nullptr || out == nullptr) {
        set_error(err_msg, "exp and out must not be NULL");
        return TCSHPT_ERR_ARGUMENT;
    }
    return guarded(err_msg, [&] {
        const tcshpt::RunConfig cfg = tcshpt::to_run_config(exp->file);
        tcshpt::TrialCallback on_trial;
        if (callback != nullptr) {
            on_trial = [callback, user_data](const tcshpt::TrialRecord& r) {
                const std::string json = tcshpt::to_json(r).dump();
                callback(json.c_str(), user_data);
            };
        }
        auto handle = std::make_unique<tcshpt_result>();
        handle->outcome = tcshpt::repeat_runs(cfg, on_trial);
        *out = handle.release();
        return TCSHPT_OK;
    });
}

int tcshpt_result_run_count(const tcshpt_result* result) {
    if (result == nullptr) return 0;
    return static_cast<int>(result->outcome.outcomes.size());
}

double tcshpt_result_mean_best(const tcshpt_result* result) {
    if (result == nullptr) return std::nan("");
    return result->outcome.mean_best;
}

double tcshpt_result_std_best(const tcshpt_result* result) {
    if (result == nullptr) return std::nan("");
    return result->outcome.std_best;
}

int tcshpt_result_degenerate_std(const tcshpt_result* result) {
    if (result == nullptr) return 0;
    return result->outcome.degenerate_std ? 1 : 0;
}

tcshpt_status tcshpt_result_run_id(const tcshpt_result* result,
                                   int run_index, char** out) {
    if (result == nullptr || out == nullptr || run_index < 0 ||
        run_index >= tcshpt_result_run_count(result)) {
        return TCSHPT_ERR_ARGUMENT;
    }
    *out = dup_string(
        result->outcome.outcomes[static_cast<size_t>(run_index)].log.run_id);
    return TCSHPT_OK;
}

tcshpt_status tcshpt_result_best_metric(const tcshpt_result* result,
                                        int run_index, double* out) {
    if (result == nullptr || out == nullptr || run_index < 0 ||
        run_index >= tcshpt_result_run_count(result)) {
        return TCSHPT_ERR_ARGUMENT;
    }
    const auto& outcome =
        result->outcome.outcomes[static_cast<size_t>(run_index)];
    const auto metric =
        outcome.best.result.final_metric(outcome.log.goal.metric_name);
    *out = metric ? *metric : std::nan("");
    return TCSHPT_OK;
}

tcshpt_status tcshpt_result_best_trial(const tcshpt_result* result,
                                       int run_index, int* out) {
    if (result == nullptr || out == nullptr || run_index < 0 ||
        run_index >= tcshpt_result_run_count(result)) {
        return TCSHPT_ERR_ARGUMENT;
    }
    *out = result->outcome.outcomes[static_cast<size_t>(run_index)]
               .best.index;
    return TCSHPT_OK;
}

void tcshpt_result_free(tcshpt_result* result) { delete result; }

tcshpt_status tcshpt_log_open(const char* path, tcshpt_log** out,
                              char** err_msg) {
    if (path == nullptr || out == nullptr) {
        set_error(err_msg, "path and out must not be NULL");
        return TCSHPT_ERR_ARGUMENT;
    }
    return guarded(err_msg, [&] {
        auto handle = std::make_unique<tcshpt_log>();
        handle->log = tcshpt::load_log(path);
        *out = handle.release();
        return TCSHPT_OK;
    });
}

int tcshpt_log_trial_count(const tcshpt_log* log) {
    if (log == nullptr) return 0;
    return static_cast<int>(log->log.trials.size());
}

tcshpt_status tcshpt_log_summary(const tcshpt_log* log, int budget,
                                 char** out_text, char** err_msg) {
    if (log == nullptr || out_text == nullptr) {
        set_error(err_msg, "log and out_text must not be NULL");
        return TCSHPT_ERR_ARGUMENT;
    }
    return guarded(err_msg, [&] {
        const int effective =
            budget > 0 ? budget
                       : static_cast<int>(log->log.trials.size());
        const tcshpt::StateReport report = tcshpt::summarize(
            log->log, log->log.space, log->log.goal, effective);
        *out_text = dup_string(tcshpt::render_report(report));
        return TCSHPT_OK;
    });
}

void tcshpt_log_free(tcshpt_log* log) { delete log; }

tcshpt_status tcshpt_probe_run(tcshpt_experiment* exp,
                               const char* param_name, int n,
                               tcshpt_probe** out, char** err_msg) {
    if (exp == nullptr || out == nullptr) {
        set_error(err_msg, "exp and out must not be NULL");
        return TCSHPT_ERR_ARGUMENT;
    }
    if (n < 1) {
        set_error(err_msg, "n must be at least 1");
        return TCSHPT_ERR_ARGUMENT;
    }
    return guarded(err_msg, [&] {
        const ExperimentFile& file = exp->file;
        const tcshpt::ParamDef* param = nullptr;
        if (param_name != nullptr) {
            param = file.space.find(param_name);
            if (param == nullptr) {
                throw Error(Errc::kInvalidExperiment,
                            std::string("unknown parameter \"") + param_name +
                                "\"");
            }
        } else {
            for (const auto& p : file.space.params) {
                if (!p.fixed) {
                    param = &p;
                    break;
                }
            }
            if (param == nullptr) {
                throw Error(Errc::kInvalidExperiment,
                            "every parameter is fixed; nothing to probe");
            }
        }
        auto backend = tcshpt::make_backend(file.optimizer);
        const tcshpt::AnalysisReport analysis =
            tcshpt::bootstrap_analysis(file.space, file.goal);
        const tcshpt::PromptPair prompt = tcshpt::build_optimizer_prompt(
            nullptr, analysis, file.space, file.goal);
        tcshpt::ChatRequest base;
        base.model = file.optimizer.model;
        base.temperature = file.temperature;
        const auto values =
            tcshpt::probe_variability(*backend, prompt, n, *param, base);

        auto handle = std::make_unique<tcshpt_probe>();
        for (const auto& v : values) {
            if (v) {
                handle->values.emplace_back(format_value(*v));
            } else {
                handle->values.emplace_back(std::nullopt);
            }
        }
        *out = handle.release();
        return TCSHPT_OK;
    });
}

int tcshpt_probe_count(const tcshpt_probe* probe) {
    if (probe == nullptr) return 0;
    return static_cast<int>(probe->values.size());
}

int tcshpt_probe_valid_count(const tcshpt_probe* probe) {
    if (probe == nullptr) return 0;
    int valid = 0;
    for (const auto& v : probe->values) {
        if (v) ++valid;
    }
    return valid;
}

int tcshpt_probe_value(const tcshpt_probe* probe, int index, char** out) {
    if (out == nullptr) return 0;
    *out = nullptr;
    if (probe == nullptr || index < 0 ||
        index >= tcshpt_probe_count(probe)) {
        return 0;
    }
    const auto& value = probe->values[static_cast<size_t>(index)];
    if (!value) return 0;
    *out = dup_string(*value);
    return 1;
}

tcshpt_status tcshpt_probe_csv(const tcshpt_probe* probe, char** out) {
    if (probe == nullptr || out == nullptr) return TCSHPT_ERR_ARGUMENT;
    std::string csv = "attempt,value,valid\n";
    for (size_t i = 0; i < probe->values.size(); ++i) {
        csv += std::to_string(i + 1);
        csv += ',';
        if (probe->values[i]) csv += *probe->values[i];
        csv += probe->values[i] ? ",1\n" : ",0\n";
    }
    *out = dup_string(csv);
    return TCSHPT_OK;
}

void tcshpt_probe_free(tcshpt_probe* probe) { delete probe; }

tcshpt_status tcshpt_export_csv(const char* const* log_paths, int n_paths,
                                char** out, char** err_msg) {
    if (log_paths == nullptr || out == nullptr || n_paths < 1) {
        set_error(err_msg, "need at least one log path and a non-NULL out");
        return TCSHPT_ERR_ARGUMENT;
    }
    return guarded(err_msg, [&] {
        std::string csv = "run_id,trial,final_metric,best_so_far\n";
        std::vector<double> bests;
        for (int i = 0; i < n_paths; ++i) {
            if (log_paths[i] == nullptr) {
                throw Error(Errc::kIoError, "log path is NULL");
            }
            const ExperimentLog log = tcshpt::load_log(log_paths[i]);
            const bool maximize =
                log.goal.direction == tcshpt::Direction::kMaximize;
            std::optional<double> best;
            for (const auto& trial : log.trials) {
                const auto metric =
                    trial.result.final_metric(log.goal.metric_name);
                if (metric &&
                    trial.result.status == tcshpt::TrialStatus::kCompleted) {
                    if (!best || (maximize ? *metric > *best
                                           : *metric < *best)) {
                        best = *metric;
                    }
                }
                csv += log.run_id;
                csv += ',';
                csv += std::to_string(trial.index);
                csv += ',';
                if (metric) csv += tcshpt::fmt_shortest(*metric);
                csv += ',';
                if (best) csv += tcshpt::fmt_shortest(*best);
                csv += '\n';
            }
            if (best) bests.push_back(*best);
        }
        // Summary aggregates the per-run bests the same way repeated runs
        // do: mean plus sample standard deviation (n-1 denominator).
        double mean = 0.0;
        double std_dev = 0.0;
        if (!bests.empty()) {
            for (double b : bests) mean += b;
            mean /= static_cast<double>(bests.size());
            if (bests.size() > 1) {
                double acc = 0.0;
                for (double b : bests) acc += (b - mean) * (b - mean);
                std_dev =
                    std::sqrt(acc / static_cast<double>(bests.size() - 1));
            }
        }
        csv += "summary," + std::to_string(bests.size()) + ',' +
               tcshpt::fmt_shortest(mean) + ',' +
               tcshpt::fmt_shortest(std_dev) + '\n';
        *out = dup_string(csv);
        return TCSHPT_OK;
    });
}

}  // extern "C"
