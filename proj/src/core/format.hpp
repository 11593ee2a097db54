#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/types.hpp"

namespace tcshpt {

// Shortest decimal text that parses back to exactly the same double.
std::string fmt_shortest(double v);

// Fixed 6-significant-digit rendering with trailing zeros kept
// (e.g. 0.8475 -> "0.847500", 13 -> "13.0000"). Used by report text.
std::string fmt_sig6(double v);

// Parameter value as text: INT as integer, FLOAT shortest round-trip,
// choice numbers as integer when integral, strings verbatim.
std::string fmt_value(const ParamValue& v, ParamKind kind);

// Value text without a known kind (integral doubles render as integers).
std::string fmt_value(const ParamValue& v);

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::vector<std::string> split_lines(std::string_view text);

// Parses a decimal or scientific-notation number, tolerating surrounding
// whitespace and quotes. Returns nullopt when the text is not fully numeric.
std::optional<double> parse_number(std::string_view text);

// Strips markdown decoration ( **, `, #, leading list markers ) and
// surrounding whitespace from a line.
std::string strip_decoration(std::string_view line);

// Replaces every "{{key}}" in `tpl` with its value from `subs`.
std::string render_template(
    std::string_view tpl,
    const std::vector<std::pair<std::string, std::string>>& subs);

}  // namespace tcshpt
