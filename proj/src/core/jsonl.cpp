#include "core/jsonl.hpp"

#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace tcshpt {

Json to_json(const ParamValue& value) {
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    double d = std::get<double>(value);
    if (std::floor(d) == d && std::abs(d) < 9.0e15) {
        return static_cast<std::int64_t>(d);
    }
    return d;
}

ParamValue param_value_from_json(const Json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number()) return j.get<double>();
    throw Error(Errc::kIoError, "parameter value must be number or string");
}

Json to_json(const Goal& goal) {
    return Json{{"metric_name", goal.metric_name},
                {"direction", to_string(goal.direction)},
                {"target_value", goal.target_value}};
}

Goal goal_from_json(const Json& j) {
    Goal g;
    g.metric_name = j.at("metric_name").get<std::string>();
    g.direction = direction_from_string(j.at("direction").get<std::string>());
    g.target_value = j.at("target_value").get<double>();
    return g;
}

Json to_json(const ParamDef& def) {
    Json j;
    j["name"] = def.name;
    j["kind"] = to_string(def.kind);
    if (def.kind == ParamKind::kChoice) {
        Json values = Json::array();
        for (const auto& v : def.values) values.push_back(to_json(v));
        j["values"] = std::move(values);
    } else {
        j["low"] = def.low;
        j["high"] = def.high;
        j["scale"] = to_string(def.scale);
    }
    j["fixed"] = def.fixed;
    if (def.fixed_value) j["fixed_value"] = to_json(*def.fixed_value);
    return j;
}

ParamDef param_def_from_json(const Json& j) {
    ParamDef def;
    def.name = j.at("name").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "float") {
        def.kind = ParamKind::kFloat;
    } else if (kind == "int") {
        def.kind = ParamKind::kInt;
    } else if (kind == "choice") {
        def.kind = ParamKind::kChoice;
    } else {
        throw Error(Errc::kIoError, "unknown parameter kind: " + kind);
    }
    if (def.kind == ParamKind::kChoice) {
        for (const auto& v : j.at("values")) {
            def.values.push_back(param_value_from_json(v));
        }
    } else {
        def.low = j.at("low").get<double>();
        def.high = j.at("high").get<double>();
        const auto scale = j.value("scale", std::string("linear"));
        if (scale == "log") {
            def.scale = Scale::kLog;
        } else if (scale == "linear") {
            def.scale = Scale::kLinear;
        } else {
            throw Error(Errc::kIoError, "unknown scale: " + scale);
        }
    }
    def.fixed = j.value("fixed", false);
    if (j.contains("fixed_value")) {
        def.fixed_value = param_value_from_json(j.at("fixed_value"));
    }
    return def;
}

Json to_json(const SearchSpace& space) {
    Json params = Json::array();
    for (const auto& p : space.params) params.push_back(to_json(p));
    return Json{{"params", std::move(params)}};
}

SearchSpace space_from_json(const Json& j) {
    SearchSpace space;
    for (const auto& p : j.at("params")) {
        space.params.push_back(param_def_from_json(p));
    }
    return space;
}

Json to_json(const Configuration& config) {
    Json j = Json::object();
    for (const auto& [name, value] : config.assignments) {
        j[name] = to_json(value);
    }
    return j;
}

Configuration config_from_json(const Json& j) {
    Configuration config;
    for (auto it = j.begin(); it != j.end(); ++it) {
        config.assignments.emplace_back(it.key(),
                                        param_value_from_json(it.value()));
    }
    return config;
}

Json to_json(const TrialResult& result) {
    Json epochs = Json::array();
    for (const auto& e : result.epochs) {
        Json metrics = Json::object();
        for (const auto& [name, v] : e.metrics) metrics[name] = v;
        epochs.push_back(Json{{"epoch", e.epoch_index},
                              {"metrics", std::move(metrics)}});
    }
    Json finals = Json::object();
    for (const auto& [name, v] : result.final_metrics) finals[name] = v;
    Json j{{"epochs", std::move(epochs)},
           {"final_metrics", std::move(finals)},
           {"wall_time_s", result.wall_time_s},
           {"status", to_string(result.status)}};
    if (!result.failure_reason.empty()) {
        j["failure_reason"] = result.failure_reason;
    }
    return j;
}

TrialResult trial_result_from_json(const Json& j) {
    TrialResult r;
    for (const auto& e : j.at("epochs")) {
        EpochRecord rec;
        rec.epoch_index = e.at("epoch").get<int>();
        for (auto it = e.at("metrics").begin(); it != e.at("metrics").end();
             ++it) {
            rec.metrics[it.key()] = it.value().get<double>();
        }
        r.epochs.push_back(std::move(rec));
    }
    for (auto it = j.at("final_metrics").begin();
         it != j.at("final_metrics").end(); ++it) {
        r.final_metrics[it.key()] = it.value().get<double>();
    }
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.status = j.at("status").get<std::string>() == "failed"
                   ? TrialStatus::kFailed
                   : TrialStatus::kCompleted;
    r.failure_reason = j.value("failure_reason", std::string());
    return r;
}

Json to_json(const TrialRecord& record) {
    return Json{{"index", record.index},
                {"config", to_json(record.config)},
                {"justification", record.justification},
                {"result", to_json(record.result)},
                {"proposer", to_string(record.proposer)}};
}

TrialRecord trial_record_from_json(const Json& j) {
    TrialRecord r;
    r.index = j.at("index").get<int>();
    r.config = config_from_json(j.at("config"));
    r.justification = j.at("justification").get<std::string>();
    r.result = trial_result_from_json(j.at("result"));
    const auto proposer = j.at("proposer").get<std::string>();
    if (proposer == "fallback_random") {
        r.proposer = Proposer::kFallbackRandom;
    } else if (proposer == "scripted") {
        r.proposer = Proposer::kScripted;
    } else {
        r.proposer = Proposer::kLlm;
    }
    return r;
}

std::string log_to_jsonl(const ExperimentLog& log) {
    Json header{{"run_id", log.run_id},
                {"seed", log.seed},
                {"goal", to_json(log.goal)},
                {"space", to_json(log.space)},
                {"created_at", log.created_at},
                {"format_version", 1}};
    std::string out = header.dump();
    out += '\n';
    for (const auto& trial : log.trials) {
        out += to_json(trial).dump();
        out += '\n';
    }
    return out;
}

ExperimentLog log_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    ExperimentLog log;
    bool have_header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::kIoError, "log line " + std::to_string(line_no) +
                                            ": " + e.what());
        }
        try {
            if (!have_header) {
                if (j.value("format_version", 0) != 1) {
                    throw Error(Errc::kIoError,
                                "unsupported log format_version");
                }
                log.run_id = j.at("run_id").get<std::string>();
                log.seed = j.at("seed").get<std::uint64_t>();
                log.goal = goal_from_json(j.at("goal"));
                log.space = space_from_json(j.at("space"));
                log.created_at = j.at("created_at").get<std::string>();
                have_header = true;
            } else {
                log.trials.push_back(trial_record_from_json(j));
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::kIoError, "log line " + std::to_string(line_no) +
                                            ": " + e.what());
        }
    }
    if (!have_header) {
        throw Error(Errc::kIoError, "log has no header line");
    }
    return log;
}

void save_log(const ExperimentLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(Errc::kIoError, "cannot open " + path.string());
    }
    out << log_to_jsonl(log);
    if (!out) {
        throw Error(Errc::kIoError, "write failed: " + path.string());
    }
}

ExperimentLog load_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::kIoError, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return log_from_jsonl(buf.str());
}

std::string now_iso8601() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace tcshpt
