// Command-line front end. Talks to the engine exclusively through the
// public C interface so it doubles as a worked example of the library ABI.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tcshpt/tcshpt.h"

namespace {

// Exit codes: 0 success, 2 anything wrong with inputs, 3 runtime/backend
// failures mid-run.
int exit_code(tcshpt_status status) {
    switch (status) {
        case TCSHPT_OK:
            return 0;
        case TCSHPT_ERR_IO:
        case TCSHPT_ERR_VALIDATION:
        case TCSHPT_ERR_ARGUMENT:
            return 2;
        case TCSHPT_ERR_BACKEND:
        case TCSHPT_ERR_RUNTIME:
            return 3;
    }
    return 3;
}

int fail(tcshpt_status status, char* err_msg) {
    if (err_msg != nullptr) {
        std::cerr << "error: " << err_msg << "\n";
        tcshpt_string_free(err_msg);
    } else {
        std::cerr << "error: operation failed\n";
    }
    return exit_code(status);
}

struct ExperimentGuard {
    tcshpt_experiment* handle = nullptr;
    ~ExperimentGuard() { tcshpt_experiment_free(handle); }
};

struct RunOptions {
    std::string config_path;
    std::optional<int> trials;
    std::optional<int> runs;
    std::optional<long long> seed;
    std::optional<std::string> mode;
    std::optional<std::string> backend;
    std::optional<std::string> model;
    std::optional<std::string> out;
    bool verbose = false;
};

int apply_override(tcshpt_experiment* exp, const char* key,
                   const std::string& value) {
    char* err = nullptr;
    const tcshpt_status status =
        tcshpt_experiment_override(exp, key, value.c_str(), &err);
    if (status != TCSHPT_OK) return fail(status, err);
    return 0;
}

int load_with_overrides(const RunOptions& opt, ExperimentGuard& guard) {
    char* err = nullptr;
    const tcshpt_status status =
        tcshpt_experiment_load(opt.config_path.c_str(), &guard.handle, &err);
    if (status != TCSHPT_OK) return fail(status, err);

    if (opt.trials && (apply_override(guard.handle, "trials",
                                      std::to_string(*opt.trials)) != 0)) {
        return 2;
    }
    if (opt.runs && (apply_override(guard.handle, "runs",
                                    std::to_string(*opt.runs)) != 0)) {
        return 2;
    }
    if (opt.seed && (apply_override(guard.handle, "seed",
                                    std::to_string(*opt.seed)) != 0)) {
        return 2;
    }
    if (opt.mode && apply_override(guard.handle, "mode", *opt.mode) != 0) {
        return 2;
    }
    if (opt.backend &&
        apply_override(guard.handle, "backend", *opt.backend) != 0) {
        return 2;
    }
    if (opt.model && apply_override(guard.handle, "model", *opt.model) != 0) {
        return 2;
    }
    if (opt.out && apply_override(guard.handle, "output_dir", *opt.out) != 0) {
        return 2;
    }
    return 0;
}

void print_trial(const char* trial_json, void*) {
    std::cout << trial_json << "\n";
}

int cmd_run(const RunOptions& opt) {
    ExperimentGuard guard;
    if (const int rc = load_with_overrides(opt, guard); rc != 0) return rc;

    tcshpt_result* result = nullptr;
    char* err = nullptr;
    const tcshpt_status status =
        tcshpt_run(guard.handle, opt.verbose ? print_trial : nullptr,
                   nullptr, &result, &err);
    if (status != TCSHPT_OK) return fail(status, err);

    const int runs = tcshpt_result_run_count(result);
    for (int i = 0; i < runs; ++i) {
        char* run_id = nullptr;
        double best = 0.0;
        int best_trial = 0;
        tcshpt_result_run_id(result, i, &run_id);
        tcshpt_result_best_metric(result, i, &best);
        tcshpt_result_best_trial(result, i, &best_trial);
        std::printf("run %s: best %g (trial %d)\n",
                    run_id != nullptr ? run_id : "?", best, best_trial);
        tcshpt_string_free(run_id);
    }
    if (tcshpt_result_degenerate_std(result) != 0) {
        std::printf("mean best: %g (single run, no spread)\n",
                    tcshpt_result_mean_best(result));
    } else {
        std::printf("mean best: %g +- %g over %d runs\n",
                    tcshpt_result_mean_best(result),
                    tcshpt_result_std_best(result), runs);
    }
    tcshpt_result_free(result);
    return 0;
}

int cmd_summarize(const std::string& log_path, int budget) {
    tcshpt_log* log = nullptr;
    char* err = nullptr;
    tcshpt_status status = tcshpt_log_open(log_path.c_str(), &log, &err);
    if (status != TCSHPT_OK) return fail(status, err);

    char* text = nullptr;
    status = tcshpt_log_summary(log, budget, &text, &err);
    tcshpt_log_free(log);
    if (status != TCSHPT_OK) return fail(status, err);

    std::cout << text;
    tcshpt_string_free(text);
    return 0;
}

int cmd_probe(const RunOptions& opt, const std::string& param, int attempts,
              const std::string& csv_path) {
    ExperimentGuard guard;
    if (const int rc = load_with_overrides(opt, guard); rc != 0) return rc;

    tcshpt_probe* probe = nullptr;
    char* err = nullptr;
    const tcshpt_status status = tcshpt_probe_run(
        guard.handle, param.empty() ? nullptr : param.c_str(), attempts,
        &probe, &err);
    if (status != TCSHPT_OK) return fail(status, err);

    const int count = tcshpt_probe_count(probe);
    for (int i = 0; i < count; ++i) {
        char* value = nullptr;
        if (tcshpt_probe_value(probe, i, &value) == 1) {
            std::printf("attempt %d: %s\n", i + 1, value);
            tcshpt_string_free(value);
        } else {
            std::printf("attempt %d: invalid\n", i + 1);
        }
    }
    std::printf("valid: %d/%d\n", tcshpt_probe_valid_count(probe), count);

    char* csv = nullptr;
    if (tcshpt_probe_csv(probe, &csv) == TCSHPT_OK) {
        std::ofstream file(csv_path);
        if (file) {
            file << csv;
        } else {
            std::cerr << "error: cannot write " << csv_path << "\n";
            tcshpt_string_free(csv);
            tcshpt_probe_free(probe);
            return 2;
        }
        tcshpt_string_free(csv);
    }
    tcshpt_probe_free(probe);
    return 0;
}

int cmd_export(const std::vector<std::string>& logs,
               const std::string& format, const std::string& out_path) {
    if (format != "csv") {
        std::cerr << "error: unsupported format \"" << format
                  << "\"; only csv is available\n";
        return 2;
    }
    std::vector<const char*> paths;
    paths.reserve(logs.size());
    for (const auto& path : logs) paths.push_back(path.c_str());

    char* csv = nullptr;
    char* err = nullptr;
    const tcshpt_status status = tcshpt_export_csv(
        paths.data(), static_cast<int>(paths.size()), &csv, &err);
    if (status != TCSHPT_OK) return fail(status, err);

    if (out_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream file(out_path);
        if (!file) {
            std::cerr << "error: cannot write " << out_path << "\n";
            tcshpt_string_free(csv);
            return 2;
        }
        file << csv;
    }
    tcshpt_string_free(csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        std::string("hyperparameter tuning driven by LLM agents (v") +
        tcshpt_version() + ")"};
    app.require_subcommand(1);

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand(
        "run", "Execute an experiment file's full run budget");
    run->add_option("config", run_opt.config_path, "experiment JSON file")
        ->required();
    run->add_option("--trials", run_opt.trials, "trials per run");
    run->add_option("--runs", run_opt.runs, "independent runs");
    run->add_option("--seed", run_opt.seed, "seed of the first run");
    run->add_option("--mode", run_opt.mode, "tcs, no-tcs or random");
    run->add_option("--backend", run_opt.backend,
                    "backend for both agents (openai, ollama, "
                    "scripted:<policy>)");
    run->add_option("--model", run_opt.model, "model name for both agents");
    run->add_option("--out", run_opt.out, "output directory for logs");
    run->add_flag("--verbose", run_opt.verbose,
                  "print each trial record as JSON");

    std::string log_path;
    int budget = 0;
    CLI::App* summarize = app.add_subcommand(
        "summarize", "Render the state report for a trial log");
    summarize->add_option("log", log_path, "trial log (.jsonl)")->required();
    summarize->add_option(
        "--budget", budget,
        "total trial allotment shown in the report (default: log length)");

    RunOptions probe_opt;
    std::string probe_param;
    int probe_attempts = 10;
    std::string probe_csv = "probe.csv";
    CLI::App* probe = app.add_subcommand(
        "probe", "Measure response variance on the first optimizer prompt");
    probe->add_option("config", probe_opt.config_path,
                      "experiment JSON file")
        ->required();
    probe->add_option("--param", probe_param,
                      "parameter to extract (default: first optimizable)");
    probe->add_option("-n,--attempts", probe_attempts,
                      "number of identical prompts to send")
        ->check(CLI::PositiveNumber);
    probe->add_option("--out", probe_csv, "CSV output path");
    probe->add_option("--backend", probe_opt.backend,
                      "backend override for both agents");
    probe->add_option("--model", probe_opt.model,
                      "model override for both agents");

    std::vector<std::string> export_logs;
    std::string export_format = "csv";
    std::string export_out;
    CLI::App* exporter = app.add_subcommand(
        "export", "Merge trial logs into a comparison table");
    exporter->add_option("logs", export_logs, "trial logs (.jsonl)")
        ->required()
        ->expected(-1);
    exporter->add_option("--format", export_format, "output format");
    exporter->add_option("--out", export_out,
                         "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run->parsed()) return cmd_run(run_opt);
    if (summarize->parsed()) return cmd_summarize(log_path, budget);
    if (probe->parsed()) {
        return cmd_probe(probe_opt, probe_param, probe_attempts, probe_csv);
    }
    if (exporter->parsed()) {
        return cmd_export(export_logs, export_format, export_out);
    }
    return 2;
}
