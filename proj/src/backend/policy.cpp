#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "backend/scripted.hpp"
#include "core/error.hpp"
#include "core/format.hpp"

// Deterministic response policies. "coordinate-search" reads the rendered
// state report out of the analysis prompt and plays a bin-exploration /
// step-refinement strategy strong enough to solve the built-in quadratic
// within 10 trials; "naive-midpoint" ignores all context and proposes every
// range's midpoint. Both exist so the full agent loop can run and be
// compared offline, with no model in the loop.

namespace tcshpt {
namespace {

struct HistoryEntry {
    int trial = 0;
    std::string value_text;
    std::optional<double> value_num;
    std::optional<double> metric;  // absent for failed trials
};

struct PolicyParam {
    std::string name;
    bool is_choice = false;
    bool is_int = false;
    bool log_scale = false;
    bool fixed = false;
    double low = 0.0;
    double high = 0.0;
    std::string current_text;
    std::string best_text;  // "n/a" when nothing completed yet
    std::vector<std::pair<double, double>> unexplored;
    std::vector<std::string> unexplored_choice;
    std::vector<HistoryEntry> history;

    std::string pinned() const {
        return best_text == "n/a" ? current_text : best_text;
    }
};

struct PolicyView {
    bool minimize = true;
    std::vector<PolicyParam> params;
};

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

std::optional<PolicyParam> parse_def_line(const std::string& line) {
    if (line.empty() || line[0] == ' ') return std::nullopt;
    size_t colon = line.find(": ");
    if (colon == std::string::npos || colon == 0) return std::nullopt;
    PolicyParam p;
    p.name = line.substr(0, colon);
    std::string rest = line.substr(colon + 2);
    p.fixed = rest.find(", fixed at ") != std::string::npos;
    if (starts_with(rest, "choice of [")) {
        p.is_choice = true;
        return p;
    }
    p.is_int = starts_with(rest, "int,");
    p.log_scale = rest.find(", log,") != std::string::npos;
    size_t open = rest.find("range [");
    if (open == std::string::npos) return std::nullopt;
    size_t close = rest.find(']', open);
    if (close == std::string::npos) return std::nullopt;
    std::string range = rest.substr(open + 7, close - open - 7);
    size_t comma = range.find(", ");
    if (comma == std::string::npos) return std::nullopt;
    auto low = parse_number(range.substr(0, comma));
    auto high = parse_number(range.substr(comma + 2));
    if (!low || !high) return std::nullopt;
    p.low = *low;
    p.high = *high;
    return p;
}

void parse_history(const std::string& payload, PolicyParam& p) {
    if (payload == "none") return;
    size_t start = 0;
    while (start < payload.size()) {
        size_t end = payload.find("; ", start);
        std::string entry = payload.substr(
            start, end == std::string::npos ? std::string::npos : end - start);
        do {
            if (!starts_with(entry, "trial ")) break;
            size_t colon = entry.find(": ");
            if (colon == std::string::npos) break;
            size_t arrow = entry.find(" -> ", colon);
            if (arrow == std::string::npos) break;
            HistoryEntry h;
            auto idx = parse_number(entry.substr(6, colon - 6));
            if (!idx) break;
            h.trial = static_cast<int>(*idx);
            h.value_text = entry.substr(colon + 2, arrow - colon - 2);
            h.value_num = parse_number(h.value_text);
            std::string metric = entry.substr(arrow + 4);
            if (metric != "failed") h.metric = parse_number(metric);
            p.history.push_back(std::move(h));
        } while (false);
        if (end == std::string::npos) break;
        start = end + 2;
    }
}

void parse_unexplored(const std::string& payload, PolicyParam& p) {
    if (payload == "none") return;
    if (p.is_choice) {
        size_t start = 0;
        while (start <= payload.size()) {
            size_t end = payload.find(", ", start);
            std::string v = payload.substr(
                start,
                end == std::string::npos ? std::string::npos : end - start);
            if (!v.empty()) p.unexplored_choice.push_back(v);
            if (end == std::string::npos) break;
            start = end + 2;
        }
        return;
    }
    size_t pos = 0;
    while ((pos = payload.find('(', pos)) != std::string::npos) {
        size_t close = payload.find(')', pos);
        if (close == std::string::npos) break;
        std::string pair = payload.substr(pos + 1, close - pos - 1);
        size_t comma = pair.find(", ");
        if (comma != std::string::npos) {
            auto lo = parse_number(pair.substr(0, comma));
            auto hi = parse_number(pair.substr(comma + 2));
            if (lo && hi) p.unexplored.emplace_back(*lo, *hi);
        }
        pos = close + 1;
    }
}

// Reads the report rendering back out of the analysis prompt. Returns
// nullopt when the text carries no parseable HYPERPARAMETER ANALYSIS
// section (e.g. the ablation feeds raw JSON instead).
std::optional<PolicyView> parse_view(const std::string& text) {
    PolicyView view;
    auto lines = split_lines(text);
    size_t i = 0;
    for (; i < lines.size(); ++i) {
        if (starts_with(lines[i], "goal: ")) {
            view.minimize =
                lines[i].find("minimize") != std::string::npos;
        }
        if (lines[i] == "HYPERPARAMETER ANALYSIS") break;
    }
    if (i == lines.size()) return std::nullopt;
    ++i;
    PolicyParam* open = nullptr;
    for (; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) break;  // section over
        if (starts_with(line, "  ")) {
            if (!open) continue;
            std::string body = line.substr(2);
            if (starts_with(body, "current: ")) {
                open->current_text = body.substr(9);
            } else if (starts_with(body, "best so far: ")) {
                open->best_text = body.substr(13);
            } else if (starts_with(body, "history: ")) {
                parse_history(body.substr(9), *open);
            } else if (starts_with(body, "unexplored: ")) {
                parse_unexplored(body.substr(12), *open);
            }
            continue;
        }
        if (auto def = parse_def_line(line)) {
            view.params.push_back(*def);
            open = &view.params.back();
        }
    }
    if (view.params.empty()) return std::nullopt;
    return view;
}

int bin_count(const PolicyParam& p) {
    if (!p.log_scale) return 4;
    int n = 1;
    int e_min = static_cast<int>(std::floor(std::log10(p.low))) - 1;
    int e_max = static_cast<int>(std::ceil(std::log10(p.high))) + 1;
    for (int e = e_min; e <= e_max; ++e) {
        double power = std::pow(10.0, e);
        if (power > p.low * (1.0 + 1e-12) && power < p.high * (1.0 - 1e-12)) {
            ++n;
        }
    }
    return n;
}

std::string fmt_policy_value(double v, bool is_int) {
    if (is_int) v = std::round(v);
    return fmt_value(ParamValue(v), is_int ? ParamKind::kInt
                                           : ParamKind::kFloat);
}

double bin_midpoint(double lo, double hi, bool log_scale) {
    return log_scale ? std::sqrt(lo * hi) : (lo + hi) / 2.0;
}

bool better(double a, double b, bool minimize) {
    return minimize ? a < b : a > b;
}

// Trials reassembled by joining the per-parameter histories on trial index.
struct JoinedTrial {
    int index = 0;
    std::map<std::string, std::string> values;
    std::optional<double> metric;
};

std::vector<JoinedTrial> join_trials(const PolicyView& view) {
    std::map<int, JoinedTrial> by_index;
    for (const auto& p : view.params) {
        for (const auto& h : p.history) {
            auto& t = by_index[h.trial];
            t.index = h.trial;
            t.values[p.name] = h.value_text;
            if (h.metric) t.metric = h.metric;
        }
    }
    std::vector<JoinedTrial> out;
    for (auto& [idx, t] : by_index) out.push_back(std::move(t));
    return out;
}

// The parameter whose change most recently produced a new best result;
// falls back to the first tunable numeric parameter.
std::string most_recently_improved(const PolicyView& view,
                                   const std::vector<JoinedTrial>& trials) {
    std::string fallback;
    for (const auto& p : view.params) {
        if (!p.fixed && !p.is_choice) {
            fallback = p.name;
            break;
        }
    }
    std::optional<double> best;
    std::string winner = fallback;
    for (size_t k = 0; k < trials.size(); ++k) {
        if (!trials[k].metric) continue;
        bool improved = !best || better(*trials[k].metric, *best,
                                        view.minimize);
        if (!improved) continue;
        best = trials[k].metric;
        if (k == 0) {
            winner = fallback;
            continue;
        }
        for (const auto& p : view.params) {
            if (p.fixed || p.is_choice) continue;
            auto cur = trials[k].values.find(p.name);
            auto prev = trials[k - 1].values.find(p.name);
            if (cur != trials[k].values.end() &&
                prev != trials[k - 1].values.end() &&
                cur->second != prev->second) {
                winner = p.name;
                break;
            }
        }
    }
    return winner;
}

// Parabola vertex through three points; nullopt when the curvature points
// the wrong way or degenerates.
std::optional<double> parabola_vertex(double u1, double f1, double u2,
                                      double f2, double u3, double f3,
                                      bool minimize) {
    double denom = (u1 - u2) * (u1 - u3) * (u2 - u3);
    if (denom == 0.0) return std::nullopt;
    double a = (u3 * (f2 - f1) + u2 * (f1 - f3) + u1 * (f3 - f2)) / denom;
    double b =
        (u3 * u3 * (f1 - f2) + u2 * u2 * (f3 - f1) + u1 * u1 * (f2 - f3)) /
        denom;
    if (minimize ? a <= 0.0 : a >= 0.0) return std::nullopt;
    double v = -b / (2.0 * a);
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

struct RefinementPick {
    std::string param;
    double value = 0.0;
    bool used_vertex = false;
};

std::optional<RefinementPick> refine(const PolicyView& view) {
    auto trials = join_trials(view);

    // Rank tunable numeric parameters by how many refinement values they
    // have already consumed (distinct tried values beyond one per bin).
    const PolicyParam* chosen = nullptr;
    int chosen_extra = 0;
    std::string recent = most_recently_improved(view, trials);
    for (const auto& p : view.params) {
        if (p.fixed || p.is_choice) continue;
        std::vector<double> distinct;
        for (const auto& h : p.history) {
            if (!h.value_num) continue;
            bool seen = false;
            for (double d : distinct) {
                if (d == *h.value_num) seen = true;
            }
            if (!seen) distinct.push_back(*h.value_num);
        }
        int extra = std::max(
            0, static_cast<int>(distinct.size()) - bin_count(p));
        if (!chosen || extra < chosen_extra ||
            (extra == chosen_extra && p.name == recent &&
             chosen->name != recent)) {
            chosen = &p;
            chosen_extra = extra;
        }
    }
    if (!chosen) return std::nullopt;
    const PolicyParam& p = *chosen;

    auto coord = [&](double v) { return p.log_scale ? std::log10(v) : v; };
    auto uncoord = [&](double u) {
        return p.log_scale ? std::pow(10.0, u) : u;
    };

    auto pinned_best = parse_number(p.pinned());
    if (!pinned_best) return std::nullopt;
    double v_star = *pinned_best;

    std::vector<double> tried;
    for (const auto& h : p.history) {
        if (h.value_num) tried.push_back(*h.value_num);
    }
    auto is_tried = [&](double v) {
        for (double t : tried) {
            if (v == t) return true;
            if (t != 0.0 && std::abs(v - t) <= 1e-12 * std::abs(t)) {
                return true;
            }
        }
        return false;
    };

    double width = p.log_scale
                       ? 1.0  // one decade, in log10 coordinates
                       : (p.high - p.low) / 4.0;
    double step = width / std::pow(2.0, chosen_extra + 1);

    // Vertex estimate from the best-explained slice of history: rows that
    // share the other parameters' values, preferring the best
    // configuration's slice, then the most populated one.
    std::optional<double> vertex;
    {
        std::string best_sig;
        std::map<std::string, std::vector<std::pair<double, double>>> groups;
        for (const auto& q : view.params) {
            if (q.name == p.name || q.fixed) continue;
            best_sig += q.name + "=" + q.pinned() + ";";
        }
        for (const auto& t : trials) {
            if (!t.metric) continue;
            auto self = t.values.find(p.name);
            if (self == t.values.end()) continue;
            auto v = parse_number(self->second);
            if (!v) continue;
            std::string sig;
            bool complete = true;
            for (const auto& q : view.params) {
                if (q.name == p.name || q.fixed) continue;
                auto it = t.values.find(q.name);
                if (it == t.values.end()) {
                    complete = false;
                    break;
                }
                sig += q.name + "=" + it->second + ";";
            }
            if (complete) groups[sig].emplace_back(*v, *t.metric);
        }
        auto dedupe = [&](std::vector<std::pair<double, double>> pts) {
            std::sort(pts.begin(), pts.end());
            std::vector<std::pair<double, double>> out;
            for (const auto& pt : pts) {
                if (!out.empty() && out.back().first == pt.first) {
                    if (better(pt.second, out.back().second, view.minimize)) {
                        out.back().second = pt.second;
                    }
                } else {
                    out.push_back(pt);
                }
            }
            return out;
        };
        std::vector<std::pair<double, double>> pts;
        if (auto it = groups.find(best_sig); it != groups.end()) {
            auto d = dedupe(it->second);
            if (d.size() >= 3) pts = std::move(d);
        }
        if (pts.empty()) {
            size_t most = 0;
            for (const auto& [sig, raw] : groups) {
                auto d = dedupe(raw);
                if (d.size() >= 3 && d.size() > most) {
                    most = d.size();
                    pts = std::move(d);
                }
            }
        }
        if (!pts.empty()) {
            size_t best_at = 0;
            for (size_t k = 1; k < pts.size(); ++k) {
                if (better(pts[k].second, pts[best_at].second,
                           view.minimize)) {
                    best_at = k;
                }
            }
            size_t lo = best_at == 0 ? 0
                        : best_at == pts.size() - 1 ? pts.size() - 3
                                                    : best_at - 1;
            auto [x1, y1] = pts[lo];
            auto [x2, y2] = pts[lo + 1];
            auto [x3, y3] = pts[lo + 2];
            vertex = parabola_vertex(coord(x1), y1, coord(x2), y2, coord(x3),
                                     y3, view.minimize);
        }
    }

    double u_star = coord(v_star);
    if (vertex) {
        double v = uncoord(*vertex);
        if (v >= p.low && v <= p.high && std::abs(*vertex - u_star) <= step &&
            !is_tried(v)) {
            return RefinementPick{p.name, v, true};
        }
    }
    double s = step;
    for (int halvings = 0; halvings < 7; ++halvings) {
        for (double u : {u_star + s, u_star - s}) {
            double v = uncoord(u);
            if (p.is_int) v = std::round(v);
            if (v >= p.low && v <= p.high && !is_tried(v)) {
                return RefinementPick{p.name, v, false};
            }
        }
        s /= 2.0;
    }
    return RefinementPick{p.name, v_star, false};
}

std::string assignment_list(const PolicyView& view,
                            const std::string& changed_name,
                            const std::string& changed_value) {
    std::string out;
    for (const auto& p : view.params) {
        if (p.fixed) continue;
        if (!out.empty()) out += ", ";
        out += p.name + " = ";
        out += p.name == changed_name ? changed_value : p.pinned();
    }
    return out;
}

std::string six_sections(const std::string& diagnosis,
                         const std::string& impact, const std::string& action,
                         const std::string& recommendation,
                         const std::string& reasoning,
                         const std::string& outcome) {
    return "Problem Diagnosis: " + diagnosis +
           "\nHyperparameter Impact Assessment: " + impact +
           "\nPrimary Action: " + action +
           "\nSpecific Recommendation: " + recommendation +
           "\nReasoning: " + reasoning +
           "\nExpected Outcome: " + outcome + "\n";
}

std::string coordinate_search_analysis(const std::string& text) {
    auto view = parse_view(text);
    if (!view) {
        return six_sections(
            "the provided context is unstructured",
            "cannot be assessed from raw records",
            "gather structured evidence",
            "none",
            "without a structured summary no parameter stands out",
            "the next trial provides a usable baseline");
    }

    // Exploration: the first tunable parameter that still owns an untouched
    // bin or choice value.
    for (const auto& p : view->params) {
        if (p.fixed) continue;
        if (p.is_choice && !p.unexplored_choice.empty()) {
            const std::string& pick = p.unexplored_choice.front();
            return six_sections(
                "parts of the search space are still untested",
                p.name + " has untried choices",
                "adjust " + p.name,
                assignment_list(*view, p.name, pick),
                "trying each choice once before refining anything",
                "coverage of " + p.name + " improves");
        }
        if (!p.is_choice && !p.unexplored.empty()) {
            auto [lo, hi] = p.unexplored.front();
            double mid = bin_midpoint(lo, hi, p.log_scale);
            std::string value = fmt_policy_value(mid, p.is_int);
            return six_sections(
                "parts of the search space are still untested",
                p.name + " has an unexplored region (" + fmt_shortest(lo) +
                    ", " + fmt_shortest(hi) + ")",
                "adjust " + p.name,
                assignment_list(*view, p.name, value),
                "probing the middle of the widest untouched region of " +
                    p.name + " while holding the best known values",
                "the response surface around " + p.name +
                    " becomes clearer");
        }
    }

    // Refinement: shrink steps around the best known point.
    if (auto pick = refine(*view)) {
        std::string value;
        for (const auto& p : view->params) {
            if (p.name == pick->param) {
                value = fmt_policy_value(pick->value, p.is_int);
            }
        }
        return six_sections(
            "all coarse regions are covered; remaining gains are local",
            pick->param + " shows the strongest local structure",
            "adjust " + pick->param,
            assignment_list(*view, pick->param, value),
            pick->used_vertex
                ? std::string("a parabolic fit through the best slice of "
                              "history points at this value")
                : std::string("stepping off the best value with a halved "
                              "step keeps the move inside the trusted "
                              "region"),
            "the metric improves or the local optimum is confirmed");
    }

    std::string first;
    for (const auto& p : view->params) {
        if (!p.fixed) {
            first = p.name;
            break;
        }
    }
    return six_sections("no tunable numeric parameter remains",
                        "all parameters pinned or categorical",
                        "adjust " + first,
                        assignment_list(*view, "", ""),
                        "repeating the best known configuration",
                        "the best result is confirmed");
}

// Lifts "name = value" pairs from the latest Specific Recommendation line.
std::vector<std::pair<std::string, std::string>> lift_recommendation(
    const std::string& text) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string payload;
    for (const auto& line : split_lines(text)) {
        auto t = trim(line);
        if (starts_with(t, "Specific Recommendation:")) {
            std::string rest(trim(t.substr(24)));
            if (rest.find('=') != std::string::npos) payload = rest;
        }
    }
    size_t start = 0;
    while (start <= payload.size()) {
        size_t end = payload.find(',', start);
        std::string item = payload.substr(
            start, end == std::string::npos ? std::string::npos : end - start);
        size_t eq = item.find('=');
        if (eq != std::string::npos) {
            std::string name(trim(item.substr(0, eq)));
            std::string value(trim(item.substr(eq + 1)));
            if (!name.empty() && !value.empty()) {
                pairs.emplace_back(name, value);
            }
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return pairs;
}

// Midpoints parsed from the optimizer prompt's own parameter listing; the
// last-resort proposal and the whole of the naive policy.
std::vector<std::pair<std::string, std::string>> listing_midpoints(
    const std::string& text) {
    std::vector<std::pair<std::string, std::string>> pairs;
    bool in_optimizable = false;
    for (const auto& line : split_lines(text)) {
        if (trim(line) == "Optimizable parameters:") {
            in_optimizable = true;
            continue;
        }
        if (!in_optimizable) continue;
        if (line.empty() || starts_with(line, "#")) break;
        constexpr std::string_view kElem = " ∈ ";
        size_t sep = line.find(kElem);
        if (sep == std::string::npos) continue;
        std::string name = line.substr(0, sep);
        std::string rest = line.substr(sep + kElem.size());
        if (rest.empty()) continue;
        if (rest.front() == '{') {
            size_t close = rest.find('}');
            if (close == std::string::npos) continue;
            std::string body = rest.substr(1, close - 1);
            size_t comma = body.find(',');
            pairs.emplace_back(
                name, std::string(trim(comma == std::string::npos
                                           ? body
                                           : body.substr(0, comma))));
            continue;
        }
        if (rest.front() != '[') continue;
        size_t close = rest.find(']');
        if (close == std::string::npos) continue;
        std::string body = rest.substr(1, close - 1);
        size_t comma = body.find(", ");
        if (comma == std::string::npos) continue;
        auto lo = parse_number(body.substr(0, comma));
        auto hi = parse_number(body.substr(comma + 2));
        if (!lo || !hi) continue;
        bool log_scale = rest.find("(log") != std::string::npos;
        bool is_int = rest.find("integer") != std::string::npos;
        double mid = bin_midpoint(*lo, *hi, log_scale);
        pairs.emplace_back(name, fmt_policy_value(mid, is_int));
    }
    return pairs;
}

std::string optimizer_reply(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::string& reasoning) {
    std::string line = "hyperparameters: ";
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (i) line += ", ";
        line += pairs[i].first + "=" + pairs[i].second;
    }
    return "reasoning: " + reasoning + "\n" + line;
}

bool is_optimizer_prompt(const std::string& text) {
    return text.find("## Your Task") != std::string::npos;
}

std::string coordinate_search(const std::string& text) {
    if (!is_optimizer_prompt(text)) return coordinate_search_analysis(text);
    auto pairs = lift_recommendation(text);
    if (!pairs.empty()) {
        return optimizer_reply(pairs,
                               "following the latest analysis recommendation");
    }
    return optimizer_reply(listing_midpoints(text),
                           "no usable recommendation; starting from the "
                           "middle of every range");
}

std::string naive_midpoint(const std::string& text) {
    if (!is_optimizer_prompt(text)) {
        return six_sections(
            "results so far are inconclusive",
            "no single parameter stands out",
            "keep a steady configuration",
            "maintain the current configuration",
            "without clearer evidence a stable baseline is safest",
            "comparable results to the previous trial");
    }
    return optimizer_reply(listing_midpoints(text),
                           "the middle of every range is a safe choice");
}

}  // namespace

ResponsePolicy make_policy(const std::string& name) {
    if (name == "coordinate-search") return coordinate_search;
    if (name == "naive-midpoint") return naive_midpoint;
    throw Error(Errc::kInvalidExperiment, "unknown policy: " + name);
}

}  // namespace tcshpt
