#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/format.hpp"
#include "core/jsonl.hpp"
#include "core/types.hpp"
#include "core/validate.hpp"

using namespace tcshpt;

namespace {

SearchSpace demo_space() {
    SearchSpace space;
    space.params.push_back({.name = "lr",
                            .kind = ParamKind::kFloat,
                            .low = 1e-5,
                            .high = 0.1,
                            .scale = Scale::kLog});
    space.params.push_back({.name = "dropout",
                            .kind = ParamKind::kFloat,
                            .low = 0.0,
                            .high = 0.5});
    space.params.push_back({.name = "batch_size",
                            .kind = ParamKind::kInt,
                            .low = 16,
                            .high = 256,
                            .scale = Scale::kLog});
    space.params.push_back({.name = "optimizer",
                            .kind = ParamKind::kChoice,
                            .values = {std::string("adam"), std::string("sgd"),
                                       std::string("adamw")}});
    return space;
}

TrialRecord make_trial(int index, double acc,
                       TrialStatus status = TrialStatus::kCompleted) {
    TrialRecord t;
    t.index = index;
    t.config.assignments = {{"lr", 0.001}, {"dropout", 0.25}};
    t.result.final_metrics = {{"val_accuracy", acc}};
    t.result.epochs = {{1, {{"val_accuracy", acc - 0.1}}},
                       {2, {{"val_accuracy", acc}}}};
    t.result.status = status;
    t.result.wall_time_s = 1.5;
    return t;
}

}  // namespace

TEST_CASE("shortest float text round-trips exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> exp10(-12, 12);
    for (int i = 0; i < 2000; ++i) {
        double v = mant(rng) * std::pow(10.0, exp10(rng));
        std::string text = fmt_shortest(v);
        CHECK(std::stod(text) == v);
    }
    CHECK(fmt_shortest(0.001) == "0.001");
    CHECK(fmt_shortest(1e-05) == "1e-05");
    CHECK(fmt_shortest(0.25) == "0.25");
}

TEST_CASE("six significant digits keep trailing zeros") {
    CHECK(fmt_sig6(0.8475) == "0.847500");
    CHECK(fmt_sig6(13.0) == "13.0000");
    CHECK(fmt_sig6(0.0) == "0.00000");
    CHECK(fmt_sig6(123456789.0) == "1.23457e+08");
    CHECK(fmt_sig6(-0.005) == "-0.00500000");
}

TEST_CASE("value text by parameter kind") {
    CHECK(fmt_value(64.0, ParamKind::kInt) == "64");
    CHECK(fmt_value(0.001, ParamKind::kFloat) == "0.001");
    CHECK(fmt_value(std::string("adam"), ParamKind::kChoice) == "adam");
    CHECK(fmt_value(ParamValue(2.0)) == "2");
    CHECK(fmt_value(ParamValue(2.5)) == "2.5");
}

TEST_CASE("number parsing accepts plain and scientific forms") {
    CHECK(parse_number("0.001") == 0.001);
    CHECK(parse_number(" 1e-3 ") == 0.001);
    CHECK(parse_number("\"0.5\"") == 0.5);
    CHECK(parse_number("+3") == 3.0);
    CHECK(parse_number("-2.5E2") == -250.0);
    CHECK(!parse_number("adam"));
    CHECK(!parse_number("1.0x"));
    CHECK(!parse_number(""));
    CHECK(!parse_number("nan"));
    CHECK(!parse_number("inf"));
}

TEST_CASE("midpoints: geometric on log scale, arithmetic otherwise") {
    SearchSpace space = demo_space();
    auto lr = std::get<double>(space.params[0].midpoint());
    CHECK(lr == doctest::Approx(1e-3).epsilon(1e-9));
    auto dropout = std::get<double>(space.params[1].midpoint());
    CHECK(dropout == 0.25);
    auto batch = std::get<double>(space.params[2].midpoint());
    CHECK(batch == 64.0);  // round(sqrt(16*256))
    CHECK(std::get<std::string>(space.params[3].midpoint()) == "adam");
}

TEST_CASE("space validation rejects broken definitions") {
    SearchSpace ok = demo_space();
    CHECK_NOTHROW(ok.validate());

    SearchSpace bad = demo_space();
    bad.params[0].low = 0.2;  // low >= high
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = demo_space();
    bad.params[0].low = 0.0;  // log scale needs positive low
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = demo_space();
    bad.params[3].values.clear();
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = demo_space();
    bad.params[1].name = "lr";  // duplicate
    CHECK_THROWS_AS(bad.validate(), Error);

    bad = demo_space();
    for (auto& p : bad.params) {
        p.fixed = true;
        p.fixed_value = p.midpoint();
    }
    CHECK_THROWS_AS(bad.validate(), Error);  // nothing left to tune

    bad = demo_space();
    bad.params[3].fixed = true;
    bad.params[3].fixed_value = std::string("rmsprop");  // not a choice
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("config validation normalizes and warns") {
    SearchSpace space = demo_space();

    SUBCASE("unknown name is an error") {
        std::map<std::string, ParamValue> raw{{"learning_rate", 0.001}};
        CHECK_THROWS_WITH_AS(validate_config(space, raw),
                             doctest::Contains("learning_rate"), Error);
        try {
            validate_config(space, raw);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::kUnknownParameter);
        }
    }

    SUBCASE("numeric strings are coerced") {
        std::map<std::string, ParamValue> raw{
            {"lr", std::string("1e-3")},
            {"dropout", std::string("0.3")},
            {"batch_size", std::string("128")},
            {"optimizer", std::string("sgd")}};
        auto v = validate_config(space, raw);
        CHECK(v.warnings.empty());
        CHECK(std::get<double>(*v.config.find("lr")) == 0.001);
        CHECK(std::get<double>(*v.config.find("batch_size")) == 128.0);
    }

    SUBCASE("ints round half away from zero") {
        std::map<std::string, ParamValue> raw{{"batch_size", 63.5}};
        auto v = validate_config(space, raw);
        CHECK(std::get<double>(*v.config.find("batch_size")) == 64.0);
    }

    SUBCASE("out-of-range numerics clamp with a warning") {
        std::map<std::string, ParamValue> raw{{"lr", 1.0}, {"dropout", -0.2}};
        auto v = validate_config(space, raw);
        CHECK(std::get<double>(*v.config.find("lr")) == 0.1);
        CHECK(std::get<double>(*v.config.find("dropout")) == 0.0);
        int clamped = 0;
        for (const auto& w : v.warnings)
            if (w.code == WarningCode::kClamped) ++clamped;
        CHECK(clamped == 2);
    }

    SUBCASE("missing values fall back to last trial, then midpoint") {
        std::map<std::string, ParamValue> raw{{"lr", 0.01}};
        Configuration last;
        last.assignments = {{"lr", 0.005},
                            {"dropout", 0.4},
                            {"batch_size", 32.0},
                            {"optimizer", std::string("adamw")}};
        auto v = validate_config(space, raw, &last);
        CHECK(std::get<double>(*v.config.find("lr")) == 0.01);
        CHECK(std::get<double>(*v.config.find("dropout")) == 0.4);
        CHECK(std::get<std::string>(*v.config.find("optimizer")) == "adamw");

        auto fresh = validate_config(space, raw);
        CHECK(std::get<double>(*fresh.config.find("dropout")) == 0.25);
        CHECK(std::get<std::string>(*fresh.config.find("optimizer")) ==
              "adam");
        bool filled = false;
        for (const auto& w : fresh.warnings)
            if (w.code == WarningCode::kFilled && w.param == "dropout")
                filled = true;
        CHECK(filled);
    }

    SUBCASE("fixed parameters are forced") {
        SearchSpace s = demo_space();
        s.params[3].fixed = true;
        s.params[3].fixed_value = std::string("sgd");
        std::map<std::string, ParamValue> raw{
            {"lr", 0.01}, {"optimizer", std::string("adam")}};
        auto v = validate_config(s, raw);
        CHECK(std::get<std::string>(*v.config.find("optimizer")) == "sgd");
    }

    SUBCASE("bad choice and non-numeric text raise") {
        std::map<std::string, ParamValue> raw{
            {"optimizer", std::string("rmsprop")}};
        try {
            validate_config(space, raw);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::kInvalidChoice);
            CHECK(e.param() == "optimizer");
        }
        raw = {{"lr", std::string("fast")}};
        try {
            validate_config(space, raw);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::kMalformedValue);
        }
    }

    SUBCASE("assignments come back in space order") {
        std::map<std::string, ParamValue> raw{
            {"optimizer", std::string("sgd")}, {"lr", 0.01}};
        auto v = validate_config(space, raw);
        REQUIRE(v.config.assignments.size() == 4);
        CHECK(v.config.assignments[0].first == "lr");
        CHECK(v.config.assignments[3].first == "optimizer");
    }
}

TEST_CASE("best trial selection") {
    ExperimentLog log;
    log.goal = {"val_accuracy", Direction::kMaximize, 0.9};
    log.trials.push_back(make_trial(1, 0.8));
    log.trials.push_back(make_trial(2, 0.85));
    log.trials.push_back(make_trial(3, 0.85));
    log.trials.push_back(make_trial(4, 0.7, TrialStatus::kFailed));

    CHECK(best_trial(log, log.goal).index == 2);  // earliest tie wins

    Goal minimize{"val_accuracy", Direction::kMinimize, 0.0};
    CHECK(best_trial(log, minimize).index == 1);

    ExperimentLog empty;
    empty.goal = log.goal;
    CHECK_THROWS_AS(best_trial(empty, log.goal), Error);

    ExperimentLog all_failed;
    all_failed.goal = log.goal;
    all_failed.trials.push_back(make_trial(1, 0.5, TrialStatus::kFailed));
    CHECK_THROWS_AS(best_trial(all_failed, log.goal), Error);
}

TEST_CASE("goal comparisons honor direction") {
    Goal maximize{"acc", Direction::kMaximize, 0.9};
    CHECK(maximize.better(0.8, 0.7));
    CHECK(!maximize.better(0.7, 0.7));
    CHECK(maximize.not_worse(0.7, 0.7));
    Goal minimize{"loss", Direction::kMinimize, 0.0};
    CHECK(minimize.better(0.7, 0.8));
    CHECK(!minimize.better(0.8, 0.7));
}

TEST_CASE("log round-trips through jsonl text") {
    ExperimentLog log;
    log.run_id = "tcs-s42";
    log.seed = 42;
    log.goal = {"val_accuracy", Direction::kMaximize, 0.9};
    log.space = demo_space();
    log.created_at = "2026-01-05T10:00:00Z";
    log.append(make_trial(0, 0.8));
    auto failed = make_trial(0, 0.1, TrialStatus::kFailed);
    failed.result.failure_reason = "exit code 3";
    failed.proposer = Proposer::kFallbackRandom;
    log.append(failed);

    CHECK(log.trials[0].index == 1);
    CHECK(log.trials[1].index == 2);

    std::string text = log_to_jsonl(log);
    ExperimentLog back = log_from_jsonl(text);
    CHECK(back == log);

    auto lines = split_lines(text);
    REQUIRE(lines.size() == 3);
    auto header = nlohmann::json::parse(lines[0]);
    CHECK(header.at("format_version") == 1);
    CHECK(header.at("run_id") == "tcs-s42");
    CHECK(header.at("seed") == 42);
}

TEST_CASE("jsonl parsing rejects damaged input") {
    CHECK_THROWS_AS(log_from_jsonl(""), Error);
    CHECK_THROWS_AS(log_from_jsonl("{\"run_id\": \"x\"}\n"), Error);
    CHECK_THROWS_AS(log_from_jsonl("not json\n"), Error);
}

TEST_CASE("numeric param values serialize as integers when integral") {
    CHECK(to_json(ParamValue(64.0)).dump() == "64");
    CHECK(to_json(ParamValue(0.001)).dump() == "0.001");
    CHECK(to_json(ParamValue(std::string("adam"))).dump() == "\"adam\"");
}

TEST_CASE("template rendering replaces every placeholder") {
    std::string tpl = "goal {{goal}} on {{metric}}; {{goal}} again";
    auto out = render_template(tpl, {{"goal", "maximize"}, {"metric", "acc"}});
    CHECK(out == "goal maximize on acc; maximize again");
    CHECK(render_template("{{missing}}", {}) == "{{missing}}");
}

TEST_CASE("decoration stripping for header detection") {
    CHECK(strip_decoration("## **Problem Diagnosis**") == "Problem Diagnosis");
    CHECK(strip_decoration("- `Primary Action`") == "Primary Action");
    CHECK(strip_decoration("  Reasoning  ") == "Reasoning");
}
