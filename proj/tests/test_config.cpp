#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "config/experiment.hpp"
#include "core/error.hpp"
#include "orchestrator/orchestrator.hpp"

using namespace tcshpt;
namespace fs = std::filesystem;

namespace {

Json base_doc() {
    return Json::parse(R"({
        "goal": {"metric_name": "objective", "direction": "minimize",
                 "target_value": 0.0},
        "space": [
            {"name": "x", "kind": "float", "low": -10.0, "high": 10.0},
            {"name": "y", "kind": "float", "low": -10.0, "high": 10.0}
        ],
        "objective": {"builtin": "quadratic_2_3"},
        "agents": {
            "optimizer": {"backend": "scripted:coordinate-search"},
            "analysis": {"backend": "scripted:coordinate-search"},
            "temperature": 0.3
        },
        "budget": {"trials": 7, "runs": 2},
        "mode": "no-tcs",
        "seed": 11,
        "output_dir": "out"
    })");
}

Errc rejected(const Json& doc) {
    try {
        experiment_from_json(doc);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("document was accepted");
    return Errc::kIoError;
}

std::string rejection_message(const Json& doc) {
    try {
        experiment_from_json(doc);
    } catch (const Error& e) {
        return e.what();
    }
    FAIL("document was accepted");
    return {};
}

fs::path configs_dir() { return fs::path(TESTS_DIR) / ".." / "configs"; }

}  // namespace

TEST_CASE("full document parses into every field") {
    const ExperimentFile exp = experiment_from_json(base_doc());

    CHECK(exp.goal.metric_name == "objective");
    CHECK(exp.goal.direction == Direction::kMinimize);
    CHECK(exp.goal.target_value == 0.0);
    REQUIRE(exp.space.params.size() == 2);
    CHECK(exp.space.params[0].name == "x");
    CHECK(exp.space.params[1].kind == ParamKind::kFloat);
    CHECK(exp.objective.kind == Objective::Kind::kBuiltin);
    CHECK(exp.objective.builtin_name == "quadratic_2_3");
    CHECK(exp.optimizer.backend == "scripted:coordinate-search");
    CHECK(exp.analysis.backend == "scripted:coordinate-search");
    CHECK(exp.temperature == 0.3);
    CHECK(exp.trials == 7);
    CHECK(exp.runs == 2);
    CHECK(exp.mode == Mode::kNoTcs);
    CHECK(exp.seed == 11);
    CHECK(exp.output_dir == "out");
}

TEST_CASE("omitted optional sections fall back to defaults") {
    Json doc = base_doc();
    doc.erase("budget");
    doc.erase("mode");
    doc.erase("seed");
    doc.erase("output_dir");
    doc["agents"].erase("temperature");

    const ExperimentFile exp = experiment_from_json(doc);
    CHECK(exp.trials == 10);
    CHECK(exp.runs == 5);
    CHECK(exp.mode == Mode::kTcs);
    CHECK(exp.seed == 0);
    CHECK(exp.output_dir == "runs");
    CHECK(exp.temperature == 0.2);
}

TEST_CASE("command objectives carry argv, workdir, timeout and env") {
    Json doc = base_doc();
    doc["objective"] = Json::parse(R"({
        "command": {
            "argv": ["python3", "train.py", "--quiet"],
            "workdir": "/tmp",
            "timeout_s": 120.5,
            "env": {"CUDA_VISIBLE_DEVICES": "0"}
        }
    })");

    const ExperimentFile exp = experiment_from_json(doc);
    REQUIRE(exp.objective.kind == Objective::Kind::kCommand);
    REQUIRE(exp.objective.command.has_value());
    const CommandSpec& cmd = *exp.objective.command;
    CHECK(cmd.argv == std::vector<std::string>{"python3", "train.py",
                                               "--quiet"});
    CHECK(cmd.workdir == "/tmp");
    CHECK(cmd.timeout_s == 120.5);
    CHECK(cmd.env.at("CUDA_VISIBLE_DEVICES") == "0");
}

TEST_CASE("unknown keys are rejected at every nesting level") {
    SUBCASE("top level") {
        Json doc = base_doc();
        doc["extra"] = 1;
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
        CHECK(rejection_message(doc).find("extra") != std::string::npos);
    }
    SUBCASE("goal") {
        Json doc = base_doc();
        doc["goal"]["units"] = "%";
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("space parameter") {
        Json doc = base_doc();
        doc["space"][0]["step"] = 0.5;
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("choice parameter with range keys") {
        Json doc = base_doc();
        doc["space"][0] = Json::parse(
            R"({"name": "opt", "kind": "choice", "values": ["a"],
                "low": 0.0})");
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("numeric parameter with values key") {
        Json doc = base_doc();
        doc["space"][0]["values"] = Json::array({1, 2});
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("objective") {
        Json doc = base_doc();
        doc["objective"]["shell"] = true;
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("command") {
        Json doc = base_doc();
        doc["objective"] = Json::parse(
            R"({"command": {"argv": ["x"], "nice": 10}})");
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("agents") {
        Json doc = base_doc();
        doc["agents"]["judge"] = Json::object();
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("agent entry") {
        Json doc = base_doc();
        doc["agents"]["optimizer"]["api_key"] = "sk-123";
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("budget") {
        Json doc = base_doc();
        doc["budget"]["hours"] = 3;
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
}

TEST_CASE("missing or malformed required fields are rejected") {
    SUBCASE("goal absent") {
        Json doc = base_doc();
        doc.erase("goal");
        const std::string msg = rejection_message(doc);
        CHECK(msg.find("goal") != std::string::npos);
    }
    SUBCASE("analysis agent absent") {
        Json doc = base_doc();
        doc["agents"].erase("analysis");
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("parameter without a name") {
        Json doc = base_doc();
        doc["space"][0].erase("name");
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("objective with neither builtin nor command") {
        Json doc = base_doc();
        doc["objective"] = Json::object();
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("objective with both builtin and command") {
        Json doc = base_doc();
        doc["objective"]["command"] = Json::parse(R"({"argv": ["x"]})");
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("empty space") {
        Json doc = base_doc();
        doc["space"] = Json::array();
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("empty argv") {
        Json doc = base_doc();
        doc["objective"] = Json::parse(R"({"command": {"argv": []}})");
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
}

TEST_CASE("malformed scalar fields are rejected") {
    SUBCASE("direction") {
        Json doc = base_doc();
        doc["goal"]["direction"] = "upward";
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("scale") {
        Json doc = base_doc();
        doc["space"][0]["scale"] = "cubic";
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("kind") {
        Json doc = base_doc();
        doc["space"][0]["kind"] = "enum";
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("trials zero") {
        Json doc = base_doc();
        doc["budget"]["trials"] = 0;
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("trials as string") {
        Json doc = base_doc();
        doc["budget"]["trials"] = "10";
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("negative seed") {
        Json doc = base_doc();
        doc["seed"] = -1;
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("mode uppercase in file") {
        Json doc = base_doc();
        doc["mode"] = "TCS";
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("temperature out of range") {
        Json doc = base_doc();
        doc["agents"]["temperature"] = 3.5;
        CHECK(rejected(doc) == Errc::kInvalidExperiment);
    }
    SUBCASE("inverted range fails space validation") {
        Json doc = base_doc();
        doc["space"][0]["low"] = 10.0;
        doc["space"][0]["high"] = -10.0;
        CHECK_THROWS_AS(experiment_from_json(doc), Error);
    }
}

TEST_CASE("mode names parse case-insensitively on the command line") {
    CHECK(mode_from_string("tcs") == Mode::kTcs);
    CHECK(mode_from_string("no-tcs") == Mode::kNoTcs);
    CHECK(mode_from_string("random") == Mode::kRandom);
    CHECK(mode_from_string("TCS") == Mode::kTcs);
    CHECK(mode_from_string("Random") == Mode::kRandom);
    CHECK_THROWS_AS(mode_from_string("bayesian"), Error);
}

TEST_CASE("overrides replace file values and apply to both agents") {
    ExperimentFile exp = experiment_from_json(base_doc());
    Overrides o;
    o.trials = 3;
    o.runs = 1;
    o.seed = 99;
    o.mode = "random";
    o.backend = "ollama";
    o.model = "tinyllama";
    o.output_dir = "elsewhere";
    apply_overrides(exp, o);

    CHECK(exp.trials == 3);
    CHECK(exp.runs == 1);
    CHECK(exp.seed == 99);
    CHECK(exp.mode == Mode::kRandom);
    CHECK(exp.optimizer.backend == "ollama");
    CHECK(exp.analysis.backend == "ollama");
    CHECK(exp.optimizer.model == "tinyllama");
    CHECK(exp.analysis.model == "tinyllama");
    CHECK(exp.output_dir == "elsewhere");

    SUBCASE("empty overrides change nothing") {
        ExperimentFile fresh = experiment_from_json(base_doc());
        apply_overrides(fresh, Overrides{});
        CHECK(fresh.trials == 7);
        CHECK(fresh.optimizer.backend == "scripted:coordinate-search");
    }
    SUBCASE("zero trials override is rejected") {
        ExperimentFile fresh = experiment_from_json(base_doc());
        Overrides bad_override;
        bad_override.trials = 0;
        CHECK_THROWS_AS(apply_overrides(fresh, bad_override), Error);
    }
}

TEST_CASE("backend construction covers every transport") {
    SUBCASE("scripted policy") {
        AgentConfig agent;
        agent.backend = "scripted:coordinate-search";
        auto backend = make_backend(agent);
        REQUIRE(backend != nullptr);
        CHECK(backend->name() == "scripted:coordinate-search");
    }
    SUBCASE("scripted without a policy names the fix") {
        AgentConfig agent;
        agent.backend = "scripted";
        try {
            make_backend(agent);
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::kInvalidExperiment);
            CHECK(std::string(e.what()).find("scripted:coordinate-search") !=
                  std::string::npos);
        }
    }
    SUBCASE("unknown scripted policy") {
        AgentConfig agent;
        agent.backend = "scripted:genetic";
        CHECK_THROWS_AS(make_backend(agent), Error);
    }
    SUBCASE("openai requires base_url and model") {
        AgentConfig agent;
        agent.backend = "openai";
        agent.model = "gpt-test";
        CHECK_THROWS_AS(make_backend(agent), Error);
        agent.base_url = "http://localhost:8000";
        agent.model.clear();
        CHECK_THROWS_AS(make_backend(agent), Error);
        agent.model = "gpt-test";
        auto backend = make_backend(agent);
        CHECK(backend->name() == "openai-compat");
    }
    SUBCASE("ollama constructs") {
        AgentConfig agent;
        agent.backend = "ollama";
        agent.base_url = "http://localhost:11434";
        agent.model = "tinyllama";
        CHECK(make_backend(agent)->name() == "ollama");
    }
    SUBCASE("named but unset api key variable is an error") {
        AgentConfig agent;
        agent.backend = "openai";
        agent.base_url = "http://localhost:8000";
        agent.model = "gpt-test";
        agent.api_key_env = "TCSHPT_TEST_KEY_THAT_IS_NOT_SET";
        unsetenv("TCSHPT_TEST_KEY_THAT_IS_NOT_SET");
        try {
            make_backend(agent);
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::kInvalidExperiment);
            CHECK(std::string(e.what()).find(
                      "TCSHPT_TEST_KEY_THAT_IS_NOT_SET") !=
                  std::string::npos);
        }
        setenv("TCSHPT_TEST_KEY_THAT_IS_NOT_SET", "secret", 1);
        CHECK(make_backend(agent)->name() == "openai-compat");
        unsetenv("TCSHPT_TEST_KEY_THAT_IS_NOT_SET");
    }
    SUBCASE("unknown backend") {
        AgentConfig agent;
        agent.backend = "anthropic";
        CHECK_THROWS_AS(make_backend(agent), Error);
    }
}

TEST_CASE("run config assembly wires agents except in random mode") {
    ExperimentFile exp = experiment_from_json(base_doc());

    SUBCASE("agent modes build both backends") {
        const RunConfig cfg = to_run_config(exp);
        REQUIRE(cfg.optimizer_backend != nullptr);
        REQUIRE(cfg.analysis_backend != nullptr);
        CHECK(cfg.mode == Mode::kNoTcs);
        CHECK(cfg.trials == 7);
        CHECK(cfg.runs == 2);
        CHECK(cfg.seed == 11);
        CHECK(cfg.temperature == 0.3);
        CHECK(cfg.output_dir == "out");
        CHECK(cfg.goal.metric_name == "objective");
        CHECK(cfg.space.params.size() == 2);
    }
    SUBCASE("random mode skips backend construction entirely") {
        exp.mode = Mode::kRandom;
        exp.optimizer.backend = "openai";
        exp.optimizer.api_key_env = "TCSHPT_KEY_NOBODY_EXPORTED";
        const RunConfig cfg = to_run_config(exp);
        CHECK(cfg.optimizer_backend == nullptr);
        CHECK(cfg.analysis_backend == nullptr);
    }
}

TEST_CASE("shipped experiment files all validate") {
    size_t count = 0;
    for (const auto& entry : fs::directory_iterator(configs_dir())) {
        if (entry.path().extension() != ".json") continue;
        ++count;
        INFO("file: ", entry.path().string());
        CHECK_NOTHROW(load_experiment(entry.path()));
    }
    CHECK(count >= 8);
}

TEST_CASE("shipped quadratic file reproduces the offline study setup") {
    const ExperimentFile exp =
        load_experiment(configs_dir() / "quadratic.json");
    CHECK(exp.goal.direction == Direction::kMinimize);
    CHECK(exp.objective.builtin_name == "quadratic_2_3");
    CHECK(exp.trials == 10);
    CHECK(exp.runs == 5);
    CHECK(exp.mode == Mode::kTcs);

    const RunConfig cfg = to_run_config(exp);
    CHECK(cfg.optimizer_backend->name() == "scripted:coordinate-search");
    CHECK(cfg.analysis_backend->name() == "scripted:coordinate-search");
}

TEST_CASE("shipped vision file matches the published search space") {
    const ExperimentFile exp =
        load_experiment(configs_dir() / "cifar10_resnet18.json");
    REQUIRE(exp.space.params.size() == 7);

    const ParamDef& lr = exp.space.params[0];
    CHECK(lr.name == "lr");
    CHECK(lr.kind == ParamKind::kFloat);
    CHECK(lr.low == 1e-05);
    CHECK(lr.high == 0.1);
    CHECK(lr.scale == Scale::kLog);

    const ParamDef& optimizer = exp.space.params[1];
    CHECK(optimizer.kind == ParamKind::kChoice);
    REQUIRE(optimizer.values.size() == 2);
    CHECK(std::get<std::string>(optimizer.values[0]) == "adam");
    CHECK(std::get<std::string>(optimizer.values[1]) == "sgd");

    CHECK(exp.goal.direction == Direction::kMaximize);
    CHECK(exp.objective.kind == Objective::Kind::kCommand);
}

TEST_CASE("schema document stays aligned with the validator") {
    std::ifstream in(fs::path(TESTS_DIR) / ".." / "schema" /
                     "experiment.schema.json");
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const Json schema = Json::parse(buffer.str());

    CHECK(schema.at("additionalProperties") == false);
    CHECK(schema.at("required") ==
          Json::array({"goal", "space", "objective", "agents"}));

    std::set<std::string> top_keys;
    for (const auto& item : schema.at("properties").items()) {
        top_keys.insert(item.key());
    }
    CHECK(top_keys == std::set<std::string>{"agents", "budget", "goal",
                                            "mode", "objective", "output_dir",
                                            "seed", "space"});

    const Json& agent = schema.at("definitions").at("agent");
    CHECK(agent.at("additionalProperties") == false);
    std::set<std::string> agent_keys;
    for (const auto& item : agent.at("properties").items()) {
        agent_keys.insert(item.key());
    }
    CHECK(agent_keys == std::set<std::string>{"api_key_env", "backend",
                                              "base_url", "model"});
}

TEST_CASE("loading a random-mode run end to end from a shipped file") {
    const fs::path dir =
        fs::temp_directory_path() /
        ("tcshpt-config-test-" + std::to_string(::getpid()));
    fs::create_directories(dir);

    ExperimentFile exp = load_experiment(configs_dir() / "quadratic.json");
    Overrides o;
    o.mode = "random";
    o.trials = 4;
    o.runs = 2;
    o.seed = 7;
    o.output_dir = dir.string();
    apply_overrides(exp, o);

    const AggregateOutcome outcome = repeat_runs(to_run_config(exp));
    CHECK(outcome.outcomes.size() == 2);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "random-s7.jsonl"));
    CHECK(fs::exists(dir / "random-s8.jsonl"));

    fs::remove_all(dir);
}
