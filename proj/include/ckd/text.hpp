#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ckd::text {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Whole-string parse; nullopt on any trailing garbage or empty input.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

} // namespace ckd::text
