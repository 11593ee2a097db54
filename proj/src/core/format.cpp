#include "core/format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace tcshpt {

std::string fmt_shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string fmt_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%#.6g", v);
    return buf;
}

namespace {

bool integral_in_i64(double v) {
    return std::isfinite(v) && std::floor(v) == v &&
           std::abs(v) < 9.0e18;
}

std::string fmt_integer(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
}

}  // namespace

std::string fmt_value(const ParamValue& v, ParamKind kind) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    double d = std::get<double>(v);
    if (kind == ParamKind::kInt) return fmt_integer(std::round(d));
    if (kind == ParamKind::kChoice && integral_in_i64(d)) return fmt_integer(d);
    return fmt_shortest(d);
}

std::string fmt_value(const ParamValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    double d = std::get<double>(v);
    if (integral_in_i64(d)) return fmt_integer(d);
    return fmt_shortest(d);
}

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start < text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        // A trailing newline closes the last line instead of opening an
        // empty one.
        lines.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::optional<double> parse_number(std::string_view text) {
    auto t = trim(text);
    while (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') ||
                             (t.front() == '\'' && t.back() == '\''))) {
        t = trim(t.substr(1, t.size() - 2));
    }
    if (t.empty()) return std::nullopt;
    // from_chars does not accept a leading '+'
    if (t.front() == '+') t.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

std::string strip_decoration(std::string_view line) {
    auto t = trim(line);
    // leading list markers / heading markers
    while (!t.empty() && (t.front() == '#' || t.front() == '-' ||
                          t.front() == '*' || t.front() == '>')) {
        t.remove_prefix(1);
        t = trim(t);
    }
    std::string out;
    out.reserve(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] == '*' || t[i] == '`' || t[i] == '_') continue;
        out += t[i];
    }
    return std::string(trim(out));
}

std::string render_template(
    std::string_view tpl,
    const std::vector<std::pair<std::string, std::string>>& subs) {
    std::string out(tpl);
    for (const auto& [key, value] : subs) {
        const std::string needle = "{{" + key + "}}";
        size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

}  // namespace tcshpt
