#include "agents/agents.hpp"

#include <array>
#include <cctype>
#include <map>

#include "core/error.hpp"
#include "core/format.hpp"
#include "templates.gen.hpp"

namespace tcshpt {

namespace {

// Strips leading markdown decoration and list markers, leaving the rest of
// the line untouched (values may legitimately contain '_' or '*').
std::string_view strip_leading_decor(std::string_view s) {
    size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c == '#' || c == '*' || c == '-' || c == '>' || c == '`' ||
            c == ' ' || c == '\t') {
            ++i;
            continue;
        }
        break;
    }
    return s.substr(i);
}

// Strips "1." / "2)" numbering prefixes.
std::string_view strip_numbering(std::string_view s) {
    size_t i = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        ++i;
    }
    if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) {
        ++i;
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        return s.substr(i);
    }
    return s;
}

// Case-insensitive prefix match; returns the matched length or 0.
size_t match_prefix_ci(std::string_view s, std::string_view word) {
    if (s.size() < word.size()) return 0;
    for (size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(word[i]))) {
            return 0;
        }
    }
    return word.size();
}

// Recognizes `line` as a header for `name`: the name, optionally decorated
// and numbered, followed by a colon or nothing. Returns the inline content
// after the colon (possibly empty), or nullopt when the line is not this
// header.
std::optional<std::string> match_header(std::string_view line,
                                        std::string_view name) {
    std::string_view s = strip_numbering(strip_leading_decor(line));
    size_t n = match_prefix_ci(s, name);
    if (n == 0) return std::nullopt;
    s.remove_prefix(n);
    size_t i = 0;
    while (i < s.size() &&
           (s[i] == '*' || s[i] == '`' || s[i] == ' ' || s[i] == '\t')) {
        ++i;
    }
    if (i == s.size()) return std::string();  // bare header line
    if (s[i] != ':') return std::nullopt;  // ordinary sentence, not a header
    ++i;
    while (i < s.size() && (s[i] == '*' || s[i] == '`')) ++i;
    return std::string(trim(s.substr(i)));
}

// Payload of a "hyperparameters:" line, markdown tolerated.
std::optional<std::string> hyperparameters_payload(std::string_view line) {
    std::string_view s = strip_leading_decor(line);
    size_t n = match_prefix_ci(s, "hyperparameters");
    if (n == 0) return std::nullopt;
    s.remove_prefix(n);
    size_t i = 0;
    while (i < s.size() && (s[i] == '*' || s[i] == '`' || s[i] == ' ')) ++i;
    if (i == s.size() || s[i] != ':') return std::nullopt;
    ++i;
    while (i < s.size() && (s[i] == '*' || s[i] == '`')) ++i;
    return std::string(trim(s.substr(i)));
}

std::string strip_wrapping(std::string_view s) {
    auto t = trim(s);
    auto wrap = [](char c) {
        return c == '"' || c == '\'' || c == '`' || c == '*';
    };
    while (!t.empty() && wrap(t.front())) t.remove_prefix(1);
    while (!t.empty() && wrap(t.back())) t.remove_suffix(1);
    return std::string(trim(t));
}

// "name=value" pairs split on commas and semicolons; later duplicates win.
// Numeric-looking values become numbers, everything else stays text.
std::map<std::string, ParamValue> parse_pairs(std::string_view payload) {
    std::map<std::string, ParamValue> raw;
    size_t start = 0;
    while (start <= payload.size()) {
        size_t end = payload.find_first_of(",;", start);
        std::string_view item =
            payload.substr(start, end == std::string_view::npos
                                      ? std::string_view::npos
                                      : end - start);
        size_t eq = item.find('=');
        if (eq != std::string_view::npos) {
            std::string name = strip_wrapping(item.substr(0, eq));
            std::string value = strip_wrapping(item.substr(eq + 1));
            // Sentence-final period after the last value.
            if (value.size() > 1 && value.back() == '.') value.pop_back();
            if (!name.empty() && !value.empty()) {
                if (auto num = parse_number(value)) {
                    raw[name] = *num;
                } else {
                    raw[name] = value;
                }
            }
        }
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return raw;
}

std::string strip_reasoning_label(std::string_view joined) {
    std::string_view t = trim(joined);
    std::string_view u = strip_leading_decor(t);
    size_t n = match_prefix_ci(u, "reasoning");
    if (n) {
        std::string_view rest = u.substr(n);
        size_t i = 0;
        while (i < rest.size() &&
               (rest[i] == '*' || rest[i] == '`' || rest[i] == ' ')) {
            ++i;
        }
        if (i < rest.size() && rest[i] == ':') {
            ++i;
            while (i < rest.size() && (rest[i] == '*' || rest[i] == '`')) ++i;
            return std::string(trim(rest.substr(i)));
        }
    }
    return std::string(t);
}

std::string fixed_listing(const SearchSpace& space) {
    std::string out;
    for (const auto& def : space.params) {
        if (!def.fixed || !def.fixed_value) continue;
        if (!out.empty()) out += '\n';
        out += def.name + " = " + fmt_value(*def.fixed_value, def.kind) +
               " (fixed)";
    }
    return out.empty() ? "(none)" : out;
}

std::string optimizable_listing(const SearchSpace& space) {
    std::string out;
    for (const auto& def : space.params) {
        if (def.fixed) continue;
        if (!out.empty()) out += '\n';
        if (def.kind == ParamKind::kChoice) {
            out += def.name + " ∈ {";
            for (size_t i = 0; i < def.values.size(); ++i) {
                if (i) out += ", ";
                out += fmt_value(def.values[i], def.kind);
            }
            out += "}";
        } else {
            out += def.name + " ∈ [" + fmt_value(def.low, def.kind) +
                   ", " + fmt_value(def.high, def.kind) + "] (";
            out += to_string(def.scale);
            if (def.kind == ParamKind::kInt) out += ", integer";
            out += ")";
        }
    }
    return out.empty() ? "(none)" : out;
}

const std::array<std::string_view, 6> kSectionNames = {
    "Problem Diagnosis",      "Hyperparameter Impact Assessment",
    "Primary Action",         "Specific Recommendation",
    "Reasoning",              "Expected Outcome"};

}  // namespace

PromptPair build_optimizer_prompt(const StateReport* report,
                                  const AnalysisReport& analysis,
                                  const SearchSpace& space, const Goal& goal) {
    const std::string target = fmt_shortest(goal.target_value);

    std::string current = "none (no experiments yet)";
    std::string gap = "n/a";
    std::string trend = to_string(Trend::kInsufficientData);
    if (report) {
        const auto& sit = report->situation;
        current = sit.current_metric ? fmt_sig6(*sit.current_metric) : "n/a";
        gap = sit.gap_to_target ? fmt_sig6(*sit.gap_to_target) : "n/a";
        trend = to_string(sit.trend);
    }
    const std::string analysis_full =
        analysis.raw.empty() ? render_analysis_report(analysis) : analysis.raw;
    const std::string analysis_text{trim(analysis_full)};

    PromptPair p;
    p.system = render_template(tpl::kOptimizerSystem,
                               {{"direction", to_string(goal.direction)},
                                {"metric", goal.metric_name},
                                {"target", target}});
    p.user = render_template(tpl::kOptimizerUser,
                             {{"direction", to_string(goal.direction)},
                              {"metric", goal.metric_name},
                              {"target", target},
                              {"current", current},
                              {"gap", gap},
                              {"trend", trend},
                              {"analysis", analysis_text},
                              {"fixed", fixed_listing(space)},
                              {"optimizable", optimizable_listing(space)}});
    return p;
}

namespace {

PromptPair analysis_prompts_with_context(const std::string& context,
                                         const Goal& goal) {
    PromptPair p;
    p.system = tpl::kAnalysisSystem;
    p.user = render_template(tpl::kAnalysisUser,
                             {{"direction", to_string(goal.direction)},
                              {"metric", goal.metric_name},
                              {"target", fmt_shortest(goal.target_value)},
                              {"context", std::string(trim(context))}});
    return p;
}

}  // namespace

PromptPair build_analysis_prompts(const StateReport& report,
                                  const SearchSpace& space, const Goal& goal) {
    (void)space;  // definitions already appear inside the rendered report
    return analysis_prompts_with_context(render_report(report), goal);
}

PromptPair build_analysis_prompts_raw(const std::string& context,
                                      const SearchSpace& space,
                                      const Goal& goal) {
    (void)space;
    return analysis_prompts_with_context(context, goal);
}

AnalysisReport bootstrap_analysis(const SearchSpace& space, const Goal& goal) {
    AnalysisReport r;
    r.problem_diagnosis = "no experiments yet";
    r.impact_assessment =
        "no trial data exists; every parameter is untested";
    r.primary_action = "propose a reasonable starting configuration";
    std::string rec;
    for (const auto& def : space.params) {
        if (def.fixed) continue;
        if (!rec.empty()) rec += ", ";
        rec += def.name + " = " + fmt_value(def.midpoint(), def.kind);
    }
    r.specific_recommendation = rec;
    r.reasoning = std::string("with no evidence, the middle of each range is "
                              "the least biased starting point toward the "
                              "goal to ") +
                  to_string(goal.direction) + " " + goal.metric_name;
    r.expected_outcome = "a baseline measurement for future comparisons";
    r.structured = true;
    r.raw = render_analysis_report(r);
    return r;
}

Proposal parse_optimizer_response(const std::string& text,
                                  const SearchSpace& space,
                                  const Configuration* last) {
    auto lines = split_lines(text);
    int chosen = -1;
    std::string payload;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (auto p = hyperparameters_payload(lines[i])) {
            chosen = static_cast<int>(i);
            payload = *p;
        }
    }
    if (chosen < 0) {
        throw Error(Errc::kParseFailure,
                    "reply has no 'hyperparameters:' line");
    }
    auto raw = parse_pairs(payload);
    if (raw.empty()) {
        throw Error(Errc::kParseFailure,
                    "hyperparameters line has no name=value pairs");
    }
    std::string reasoning;
    for (int i = 0; i < chosen; ++i) {
        reasoning += lines[i];
        reasoning += '\n';
    }
    auto validated = validate_config(space, raw, last);
    Proposal proposal;
    proposal.reasoning = strip_reasoning_label(reasoning);
    proposal.config = std::move(validated.config);
    proposal.warnings = std::move(validated.warnings);
    return proposal;
}

AnalysisReport parse_analysis_response(const std::string& text) {
    AnalysisReport r;
    r.raw = text;
    std::array<std::optional<std::string>, 6> sections;
    int current = -1;
    for (const auto& line : split_lines(text)) {
        bool header = false;
        for (int k = 0; k < 6; ++k) {
            if (auto inline_content = match_header(line, kSectionNames[k])) {
                current = k;
                header = true;
                if (!sections[k]) sections[k] = std::string();
                if (!inline_content->empty()) *sections[k] = *inline_content;
                break;
            }
        }
        if (!header && current >= 0) {
            if (!sections[current]->empty()) *sections[current] += '\n';
            *sections[current] += line;
        }
    }
    auto take = [](std::optional<std::string>& s) {
        return s ? std::string(trim(*s)) : std::string();
    };
    r.problem_diagnosis = take(sections[0]);
    r.impact_assessment = take(sections[1]);
    r.primary_action = take(sections[2]);
    r.specific_recommendation = take(sections[3]);
    r.reasoning = take(sections[4]);
    r.expected_outcome = take(sections[5]);
    r.structured = true;
    for (const auto& s : sections) {
        if (!s) r.structured = false;
    }
    return r;
}

std::string render_analysis_report(const AnalysisReport& report) {
    const std::array<const std::string*, 6> bodies = {
        &report.problem_diagnosis,      &report.impact_assessment,
        &report.primary_action,         &report.specific_recommendation,
        &report.reasoning,              &report.expected_outcome};
    std::string out;
    for (int k = 0; k < 6; ++k) {
        out += kSectionNames[k];
        if (bodies[k]->find('\n') == std::string::npos) {
            out += ": " + *bodies[k] + "\n";
        } else {
            out += ":\n" + *bodies[k] + "\n";
        }
    }
    return out;
}

std::string render_hyperparameters_line(const Configuration& config,
                                        const SearchSpace& space) {
    std::string out = "hyperparameters: ";
    for (size_t i = 0; i < config.assignments.size(); ++i) {
        if (i) out += ", ";
        const auto& [name, value] = config.assignments[i];
        const ParamDef* def = space.find(name);
        out += name + "=" +
               (def ? fmt_value(value, def->kind) : fmt_value(value));
    }
    return out;
}

std::string corrective_instruction(const std::string& error) {
    return render_template(tpl::kCorrective, {{"error", error}});
}

std::vector<std::optional<ParamValue>> probe_variability(
    ChatBackend& backend, const PromptPair& prompt, int n,
    const ParamDef& param, ChatRequest base) {
    ChatRequest request = base;
    request.messages.clear();
    if (!prompt.system.empty()) {
        request.messages.push_back({Role::kSystem, prompt.system});
    }
    request.messages.push_back({Role::kUser, prompt.user});

    ParamDef probe_def = param;
    probe_def.fixed = false;
    probe_def.fixed_value.reset();
    SearchSpace solo;
    solo.params.push_back(probe_def);

    std::vector<std::optional<ParamValue>> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::optional<ParamValue> entry;
        try {
            auto response = backend.complete(request);
            std::optional<std::string> payload;
            for (const auto& line : split_lines(response.content)) {
                if (auto p = hyperparameters_payload(line)) payload = *p;
            }
            if (payload) {
                auto raw = parse_pairs(*payload);
                auto it = raw.find(param.name);
                if (it != raw.end()) {
                    std::map<std::string, ParamValue> single{
                        {param.name, it->second}};
                    auto validated = validate_config(solo, single);
                    if (const auto* v = validated.config.find(param.name)) {
                        entry = *v;
                    }
                }
            }
        } catch (const Error&) {
            // one bad attempt must not sink the batch
        }
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace tcshpt
