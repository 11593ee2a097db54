#include "config/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "backend/http.hpp"
#include "backend/scripted.hpp"
#include "core/error.hpp"

namespace tcshpt {

namespace {

[[noreturn]] void bad(const std::string& message) {
    throw Error(Errc::kInvalidExperiment, message);
}

void expect_object(const Json& j, const std::string& where) {
    if (!j.is_object()) bad(where + " must be a JSON object");
}

// Rejects unknown keys and enforces presence of the required set. Optional
// keys may be absent; anything else is a typo worth failing loudly on.
void expect_keys(const Json& j, const std::string& where,
                 std::initializer_list<const char*> required,
                 std::initializer_list<const char*> optional) {
    expect_object(j, where);
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const bool known =
            std::any_of(required.begin(), required.end(),
                        [&](const char* k) { return key == k; }) ||
            std::any_of(optional.begin(), optional.end(),
                        [&](const char* k) { return key == k; });
        if (!known) bad("unknown key \"" + key + "\" in " + where);
    }
    for (const char* key : required) {
        if (!j.contains(key)) {
            bad(where + " is missing required key \"" + std::string(key) +
                "\"");
        }
    }
}

std::string get_string(const Json& j, const std::string& where,
                       const char* key) {
    const Json& v = j.at(key);
    if (!v.is_string()) bad(where + "." + key + " must be a string");
    return v.get<std::string>();
}

std::string get_nonempty_string(const Json& j, const std::string& where,
                                const char* key) {
    std::string s = get_string(j, where, key);
    if (s.empty()) bad(where + "." + key + " must not be empty");
    return s;
}

double get_number(const Json& j, const std::string& where, const char* key) {
    const Json& v = j.at(key);
    if (!v.is_number()) bad(where + "." + key + " must be a number");
    return v.get<double>();
}

int get_positive_int(const Json& j, const std::string& where,
                     const char* key) {
    const Json& v = j.at(key);
    if (!v.is_number_integer()) bad(where + "." + key + " must be an integer");
    const auto n = v.get<std::int64_t>();
    if (n < 1 || n > 1000000) {
        bad(where + "." + key + " must be between 1 and 1000000");
    }
    return static_cast<int>(n);
}

Goal parse_goal(const Json& j) {
    expect_keys(j, "goal", {"metric_name", "direction", "target_value"}, {});
    Goal g;
    g.metric_name = get_nonempty_string(j, "goal", "metric_name");
    const std::string direction = get_string(j, "goal", "direction");
    if (direction == "minimize") {
        g.direction = Direction::kMinimize;
    } else if (direction == "maximize") {
        g.direction = Direction::kMaximize;
    } else {
        bad("goal.direction must be \"minimize\" or \"maximize\", got \"" +
            direction + "\"");
    }
    g.target_value = get_number(j, "goal", "target_value");
    return g;
}

ParamValue parse_scalar(const Json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return v.get<double>();
    bad(where + " must be a number or a string");
}

ParamDef parse_param(const Json& j, size_t index) {
    const std::string where = "space[" + std::to_string(index) + "]";
    expect_object(j, where);
    if (!j.contains("name") || !j.at("name").is_string()) {
        bad(where + " needs a string \"name\"");
    }
    if (!j.contains("kind") || !j.at("kind").is_string()) {
        bad(where + " needs a string \"kind\"");
    }
    ParamDef def;
    def.name = get_nonempty_string(j, where, "name");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "choice") {
        expect_keys(j, where, {"name", "kind", "values"},
                    {"fixed", "fixed_value"});
        def.kind = ParamKind::kChoice;
        const Json& values = j.at("values");
        if (!values.is_array() || values.empty()) {
            bad(where + ".values must be a non-empty array");
        }
        for (size_t i = 0; i < values.size(); ++i) {
            def.values.push_back(parse_scalar(
                values[i], where + ".values[" + std::to_string(i) + "]"));
        }
    } else if (kind == "float" || kind == "int") {
        expect_keys(j, where, {"name", "kind", "low", "high"},
                    {"scale", "fixed", "fixed_value"});
        def.kind = kind == "float" ? ParamKind::kFloat : ParamKind::kInt;
        def.low = get_number(j, where, "low");
        def.high = get_number(j, where, "high");
        if (j.contains("scale")) {
            const std::string scale = get_string(j, where, "scale");
            if (scale == "log") {
                def.scale = Scale::kLog;
            } else if (scale == "linear") {
                def.scale = Scale::kLinear;
            } else {
                bad(where + ".scale must be \"linear\" or \"log\", got \"" +
                    scale + "\"");
            }
        }
    } else {
        bad(where + ".kind must be \"float\", \"int\" or \"choice\", got \"" +
            kind + "\"");
    }
    if (j.contains("fixed")) {
        if (!j.at("fixed").is_boolean()) {
            bad(where + ".fixed must be a boolean");
        }
        def.fixed = j.at("fixed").get<bool>();
    }
    if (j.contains("fixed_value")) {
        def.fixed_value = parse_scalar(j.at("fixed_value"),
                                       where + ".fixed_value");
    }
    return def;
}

SearchSpace parse_space(const Json& j) {
    if (!j.is_array() || j.empty()) {
        bad("space must be a non-empty array of parameter definitions");
    }
    SearchSpace space;
    for (size_t i = 0; i < j.size(); ++i) {
        space.params.push_back(parse_param(j[i], i));
    }
    return space;
}

CommandSpec parse_command(const Json& j) {
    expect_keys(j, "objective.command", {"argv"},
                {"workdir", "timeout_s", "env"});
    CommandSpec spec;
    const Json& argv = j.at("argv");
    if (!argv.is_array() || argv.empty()) {
        bad("objective.command.argv must be a non-empty array of strings");
    }
    for (const Json& arg : argv) {
        if (!arg.is_string()) {
            bad("objective.command.argv entries must be strings");
        }
        spec.argv.push_back(arg.get<std::string>());
    }
    if (j.contains("workdir")) {
        spec.workdir = get_string(j, "objective.command", "workdir");
    }
    if (j.contains("timeout_s")) {
        const double t = get_number(j, "objective.command", "timeout_s");
        if (t <= 0) bad("objective.command.timeout_s must be positive");
        spec.timeout_s = t;
    }
    if (j.contains("env")) {
        const Json& env = j.at("env");
        expect_object(env, "objective.command.env");
        for (const auto& item : env.items()) {
            if (!item.value().is_string()) {
                bad("objective.command.env values must be strings");
            }
            spec.env[item.key()] = item.value().get<std::string>();
        }
    }
    return spec;
}

Objective parse_objective(const Json& j) {
    expect_keys(j, "objective", {}, {"builtin", "command"});
    const bool has_builtin = j.contains("builtin");
    const bool has_command = j.contains("command");
    if (has_builtin == has_command) {
        bad("objective needs exactly one of \"builtin\" or \"command\"");
    }
    Objective objective;
    if (has_builtin) {
        objective.kind = Objective::Kind::kBuiltin;
        objective.builtin_name = get_nonempty_string(j, "objective", "builtin");
    } else {
        objective.kind = Objective::Kind::kCommand;
        objective.command = parse_command(j.at("command"));
    }
    return objective;
}

AgentConfig parse_agent(const Json& j, const std::string& where) {
    expect_keys(j, where, {"backend"}, {"base_url", "model", "api_key_env"});
    AgentConfig agent;
    agent.backend = get_nonempty_string(j, where, "backend");
    if (j.contains("base_url")) {
        agent.base_url = get_string(j, where, "base_url");
    }
    if (j.contains("model")) agent.model = get_string(j, where, "model");
    if (j.contains("api_key_env")) {
        agent.api_key_env = get_string(j, where, "api_key_env");
    }
    return agent;
}

}  // namespace

Mode mode_from_string(const std::string& text) {
    std::string lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (lower == "tcs") return Mode::kTcs;
    if (lower == "no-tcs") return Mode::kNoTcs;
    if (lower == "random") return Mode::kRandom;
    bad("mode must be \"tcs\", \"no-tcs\" or \"random\", got \"" + text +
        "\"");
}

ExperimentFile experiment_from_json(const Json& j) {
    expect_keys(j, "experiment", {"goal", "space", "objective", "agents"},
                {"budget", "mode", "seed", "output_dir"});
    ExperimentFile exp;
    exp.goal = parse_goal(j.at("goal"));
    exp.space = parse_space(j.at("space"));
    exp.objective = parse_objective(j.at("objective"));

    const Json& agents = j.at("agents");
    expect_keys(agents, "agents", {"optimizer", "analysis"}, {"temperature"});
    exp.optimizer = parse_agent(agents.at("optimizer"), "agents.optimizer");
    exp.analysis = parse_agent(agents.at("analysis"), "agents.analysis");
    if (agents.contains("temperature")) {
        const double t = get_number(agents, "agents", "temperature");
        if (t < 0.0 || t > 2.0) {
            bad("agents.temperature must be between 0 and 2");
        }
        exp.temperature = t;
    }

    if (j.contains("budget")) {
        const Json& budget = j.at("budget");
        expect_keys(budget, "budget", {}, {"trials", "runs"});
        if (budget.contains("trials")) {
            exp.trials = get_positive_int(budget, "budget", "trials");
        }
        if (budget.contains("runs")) {
            exp.runs = get_positive_int(budget, "budget", "runs");
        }
    }
    if (j.contains("mode")) {
        const std::string mode = get_string(j, "experiment", "mode");
        if (mode != "tcs" && mode != "no-tcs" && mode != "random") {
            bad("mode must be \"tcs\", \"no-tcs\" or \"random\", got \"" +
                mode + "\"");
        }
        exp.mode = mode_from_string(mode);
    }
    if (j.contains("seed")) {
        const Json& seed = j.at("seed");
        if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0) {
            bad("seed must be a non-negative integer");
        }
        exp.seed = seed.get<std::uint64_t>();
    }
    if (j.contains("output_dir")) {
        exp.output_dir = get_nonempty_string(j, "experiment", "output_dir");
    }

    exp.space.validate();
    return exp;
}

ExperimentFile load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::kIoError,
                    "cannot open experiment file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const Json j = Json::parse(buffer.str(), nullptr,
                               /*allow_exceptions=*/false);
    if (j.is_discarded()) {
        bad("experiment file is not valid JSON: " + path.string());
    }
    return experiment_from_json(j);
}

void apply_overrides(ExperimentFile& exp, const Overrides& overrides) {
    if (overrides.trials) exp.trials = *overrides.trials;
    if (overrides.runs) exp.runs = *overrides.runs;
    if (overrides.seed) exp.seed = *overrides.seed;
    if (overrides.mode) exp.mode = mode_from_string(*overrides.mode);
    if (overrides.backend) {
        exp.optimizer.backend = *overrides.backend;
        exp.analysis.backend = *overrides.backend;
    }
    if (overrides.model) {
        exp.optimizer.model = *overrides.model;
        exp.analysis.model = *overrides.model;
    }
    if (overrides.output_dir) exp.output_dir = *overrides.output_dir;
    if (exp.trials < 1) bad("trials must be at least 1");
    if (exp.runs < 1) bad("runs must be at least 1");
}

std::shared_ptr<ChatBackend> make_backend(const AgentConfig& agent) {
    if (agent.backend == "openai" || agent.backend == "ollama") {
        if (agent.base_url.empty()) {
            bad("backend \"" + agent.backend + "\" requires base_url");
        }
        if (agent.model.empty()) {
            bad("backend \"" + agent.backend + "\" requires model");
        }
        HttpOptions options;
        options.base_url = agent.base_url;
        if (!agent.api_key_env.empty()) {
            const char* key = std::getenv(agent.api_key_env.c_str());
            if (key == nullptr || *key == '\0') {
                bad("environment variable " + agent.api_key_env +
                    " is named in the config but not set");
            }
            options.api_key = key;
        }
        if (agent.backend == "openai") {
            return std::make_shared<OpenAiBackend>(std::move(options));
        }
        return std::make_shared<OllamaBackend>(std::move(options));
    }
    constexpr std::string_view kScriptedPrefix = "scripted:";
    if (agent.backend.rfind(kScriptedPrefix, 0) == 0) {
        const std::string policy =
            agent.backend.substr(kScriptedPrefix.size());
        return std::make_shared<PolicyBackend>(policy, make_policy(policy));
    }
    if (agent.backend == "scripted") {
        bad("backend \"scripted\" needs a policy, e.g. "
            "\"scripted:coordinate-search\"");
    }
    bad("unknown backend \"" + agent.backend +
        "\"; expected \"openai\", \"ollama\" or \"scripted:<policy>\"");
}

RunConfig to_run_config(const ExperimentFile& exp) {
    RunConfig cfg;
    cfg.goal = exp.goal;
    cfg.space = exp.space;
    cfg.objective = exp.objective;
    cfg.temperature = exp.temperature;
    cfg.trials = exp.trials;
    cfg.runs = exp.runs;
    cfg.seed = exp.seed;
    cfg.mode = exp.mode;
    cfg.output_dir = exp.output_dir;
    if (exp.mode != Mode::kRandom) {
        cfg.optimizer_backend = make_backend(exp.optimizer);
        cfg.analysis_backend = make_backend(exp.analysis);
        cfg.optimizer_model = exp.optimizer.model;
        cfg.analysis_model = exp.analysis.model;
    }
    return cfg;
}

}  // namespace tcshpt
