#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "core/jsonl.hpp"
#include "orchestrator/orchestrator.hpp"

namespace tcshpt {

// One chat endpoint. `backend` selects the transport:
//   "openai"             OpenAI-compatible HTTP server (needs base_url, model)
//   "ollama"             Ollama HTTP server (needs base_url, model)
//   "scripted:<policy>"  deterministic built-in policy, no network
// The API key is read at run time from the environment variable named by
// api_key_env; the key itself never appears in files or logs.
struct AgentConfig {
    std::string backend;
    std::string base_url;
    std::string model;
    std::string api_key_env;

    bool operator==(const AgentConfig&) const = default;
};

// In-memory form of an experiment file (see schema/experiment.schema.json).
struct ExperimentFile {
    Goal goal;
    SearchSpace space;
    Objective objective;
    AgentConfig optimizer;
    AgentConfig analysis;
    double temperature = 0.2;
    int trials = 10;
    int runs = 5;
    Mode mode = Mode::kTcs;
    std::uint64_t seed = 0;
    std::string output_dir = "runs";
};

// Accepts "tcs", "no-tcs", "random" in any case; throws
// Error(kInvalidExperiment) otherwise.
Mode mode_from_string(const std::string& text);

// Strict parse mirroring schema/experiment.schema.json: unknown keys at any
// level, missing required fields, and type mismatches all raise
// Error(kInvalidExperiment) naming the offending key. The parsed space is
// additionally checked for structural validity.
ExperimentFile experiment_from_json(const Json& j);
ExperimentFile load_experiment(const std::filesystem::path& path);

// Command-line overrides; unset fields keep the file's values. `backend` and
// `model` apply to both agents.
struct Overrides {
    std::optional<int> trials;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<std::string> backend;
    std::optional<std::string> model;
    std::optional<std::string> output_dir;
};

void apply_overrides(ExperimentFile& exp, const Overrides& overrides);

// Builds a chat backend from one agent entry. HTTP backends require
// base_url and model; a named but unset api_key_env is an error so a typo
// cannot silently send unauthenticated requests.
std::shared_ptr<ChatBackend> make_backend(const AgentConfig& agent);

// Assembles the orchestrator configuration. RANDOM mode needs no agents, so
// backends are left null and agent entries are not touched; the other modes
// instantiate both backends via make_backend.
RunConfig to_run_config(const ExperimentFile& exp);

}  // namespace tcshpt
