#pragma once

// Helpers for the plain-text key/value documents (pipeline config, phantom
// spec, evaluation reports).

#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vesselseg/error.hpp"

namespace vesselseg::text {

[[nodiscard]] inline std::string_view trim(std::string_view s) noexcept
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

[[nodiscard]] inline double parse_double(std::string_view s, std::string_view what)
{
    s = trim(s);
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ParameterError("invalid number '" + std::string(s) + "' for " + std::string(what));
    }
    return v;
}

[[nodiscard]] inline long long parse_int(std::string_view s, std::string_view what)
{
    s = trim(s);
    long long v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ParameterError("invalid integer '" + std::string(s) + "' for " + std::string(what));
    }
    return v;
}

/// Splits on commas and/or whitespace, dropping empty fields.
[[nodiscard]] inline std::vector<std::string_view> split_list(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ',' || s[i] == ' ' || s[i] == '\t')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < s.size() && s[i] != ',' && s[i] != ' ' && s[i] != '\t') {
            ++i;
        }
        if (i > start) {
            out.push_back(s.substr(start, i - start));
        }
    }
    return out;
}

[[nodiscard]] inline std::vector<double> parse_doubles(std::string_view s, std::size_t expected, std::string_view what)
{
    const auto fields = split_list(s);
    if (fields.size() != expected) {
        std::ostringstream msg;
        msg << what << " expects " << expected << " values, got " << fields.size();
        throw ParameterError(msg.str());
    }
    std::vector<double> out;
    out.reserve(expected);
    for (const auto f : fields) {
        out.push_back(parse_double(f, what));
    }
    return out;
}

/// Calls on_entry(key, value, line_number) for each `key = value` line.
/// Blank lines and lines starting with '#' are skipped.
inline void for_each_entry(std::istream& in,
                           const std::function<void(std::string_view, std::string_view, std::size_t)>& on_entry)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = trim(view);
        if (view.empty()) {
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ParameterError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(view.substr(0, eq));
        const auto value = trim(view.substr(eq + 1));
        if (key.empty()) {
            throw ParameterError("line " + std::to_string(line_no) + ": empty key");
        }
        on_entry(key, value, line_no);
    }
}

}  // namespace vesselseg::text
